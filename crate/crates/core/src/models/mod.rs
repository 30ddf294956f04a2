//! Forecasters with hand-written backward passes.

mod activation;
mod linear;
mod mlp;

pub use activation::Activation;
pub use linear::{moving_average, LinearForecaster, LinearMode};
pub use mlp::{BatchWorkspace, Mlp};

use alloc::vec::Vec;

use rand::Rng;

use crate::error::Result;
use crate::matrix::Matrix;

/// A parameterised map from a `lookback x channels` window to a
/// `horizon x channels` forecast.
///
/// Parameters live in one flat buffer so optimisers can treat every model
/// alike.
pub trait Forecaster {
    fn lookback(&self) -> usize;
    fn horizon(&self) -> usize;
    fn channels(&self) -> usize;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];

    fn forecast(&self, input: &Matrix) -> Result<Matrix>;

    /// Adds `d(sum upstream * output) / d params` into `grad`.
    fn backprop(&self, input: &Matrix, upstream: &Matrix, grad: &mut [f64]) -> Result<()>;

    fn num_params(&self) -> usize {
        self.params().len()
    }
}

/// Uniform draws in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
pub(crate) fn uniform_init<R: Rng>(rng: &mut R, count: usize, fan_in: usize) -> Vec<f64> {
    let bound = 1.0 / libm::sqrt(fan_in.max(1) as f64);
    (0..count).map(|_| rng.random_range(-bound..=bound)).collect()
}
