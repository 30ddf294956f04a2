use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{uniform_init, Forecaster};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum LinearMode {
    /// `out = W x + b` per channel.
    Plain,
    /// DLinear: `x` is split into a moving-average trend and the remainder,
    /// each mapped by its own weight matrix.
    Decomposed { kernel: usize },
}

impl LinearMode {
    pub const DLINEAR: LinearMode = LinearMode::Decomposed { kernel: 25 };
}

/// Centred moving average with the first/last sample replicated
/// `(kernel - 1) / 2` times at each end.
pub fn moving_average(x: &[f64], kernel: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let half = (kernel.max(1) - 1) / 2;
    let at = |i: isize| -> f64 { x[i.clamp(0, n as isize - 1) as usize] };
    let inv = 1.0 / (2 * half + 1) as f64;
    (0..n as isize)
        .map(|t| (t - half as isize..=t + half as isize).map(at).sum::<f64>() * inv)
        .collect()
}

/// Linear forecaster over the time axis, optionally with trend/seasonal
/// decomposition. Weight sets are either shared by all channels or one per
/// channel.
///
/// Flat parameter layout, per group `g` (one group when shared):
/// `[W_0 (S x T) | W_1 (S x T) (decomposed only) | ... ]` for all groups,
/// followed by the biases `[b_g (S)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearForecaster {
    mode: LinearMode,
    lookback: usize,
    horizon: usize,
    channels: usize,
    channel_shared: bool,
    params: Vec<f64>,
}

impl LinearForecaster {
    pub fn new(
        mode: LinearMode,
        lookback: usize,
        horizon: usize,
        channels: usize,
        channel_shared: bool,
        seed: u64,
    ) -> Result<Self> {
        let mut model = LinearForecaster {
            mode,
            lookback,
            horizon,
            channels,
            channel_shared,
            params: Vec::new(),
        };
        model.validate_shape()?;
        let mut rng = rng::seeded(seed);
        model.params = uniform_init(&mut rng, model.expected_len(), lookback);
        Ok(model)
    }

    /// Rebuilds a model from a flat parameter buffer.
    pub fn from_params(
        mode: LinearMode,
        lookback: usize,
        horizon: usize,
        channels: usize,
        channel_shared: bool,
        params: Vec<f64>,
    ) -> Result<Self> {
        let model = LinearForecaster {
            mode,
            lookback,
            horizon,
            channels,
            channel_shared,
            params,
        };
        model.validate_shape()?;
        if model.params.len() != model.expected_len() {
            return Err(Error::shape((model.expected_len(), 1), (model.params.len(), 1)));
        }
        if model.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("non-finite parameter".into()));
        }
        Ok(model)
    }

    fn validate_shape(&self) -> Result<()> {
        if self.lookback == 0 || self.horizon == 0 || self.channels == 0 {
            return Err(Error::InvalidConfig(
                "lookback, horizon and channels must be positive".into(),
            ));
        }
        if let LinearMode::Decomposed { kernel } = self.mode {
            if kernel < 3 || kernel % 2 == 0 {
                return Err(Error::InvalidConfig(
                    "moving-average kernel must be odd and >= 3".into(),
                ));
            }
        }
        Ok(())
    }

    fn groups(&self) -> usize {
        if self.channel_shared {
            1
        } else {
            self.channels
        }
    }

    fn matrices_per_group(&self) -> usize {
        match self.mode {
            LinearMode::Plain => 1,
            LinearMode::Decomposed { .. } => 2,
        }
    }

    fn expected_len(&self) -> usize {
        let block = self.horizon * self.lookback;
        self.groups() * (self.matrices_per_group() * block + self.horizon)
    }

    pub fn mode(&self) -> LinearMode {
        self.mode
    }

    pub fn channel_shared(&self) -> bool {
        self.channel_shared
    }

    fn group_of(&self, channel: usize) -> usize {
        if self.channel_shared {
            0
        } else {
            channel
        }
    }

    /// Offset of weight matrix `which` (0 = plain / trend, 1 = seasonal).
    fn weight_offset(&self, group: usize, which: usize) -> usize {
        let block = self.horizon * self.lookback;
        (group * self.matrices_per_group() + which) * block
    }

    fn bias_offset(&self, group: usize) -> usize {
        let block = self.horizon * self.lookback;
        self.groups() * self.matrices_per_group() * block + group * self.horizon
    }

    pub fn weights(&self, group: usize, which: usize) -> &[f64] {
        let o = self.weight_offset(group, which);
        &self.params[o..o + self.horizon * self.lookback]
    }

    pub fn bias(&self, group: usize) -> &[f64] {
        let o = self.bias_offset(group);
        &self.params[o..o + self.horizon]
    }

    /// Inputs to the weight matrices of one channel: `[x]` or `[trend, remainder]`.
    fn features(&self, series: &[f64]) -> Vec<Vec<f64>> {
        match self.mode {
            LinearMode::Plain => vec![series.to_vec()],
            LinearMode::Decomposed { kernel } => {
                let trend = moving_average(series, kernel);
                let remainder = series.iter().zip(&trend).map(|(x, t)| x - t).collect();
                vec![trend, remainder]
            }
        }
    }

    fn check_input(&self, input: &Matrix) -> Result<()> {
        input.ensure_shape((self.lookback, self.channels))
    }
}

impl Forecaster for LinearForecaster {
    fn lookback(&self) -> usize {
        self.lookback
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn channels(&self) -> usize {
        self.channels
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forecast(&self, input: &Matrix) -> Result<Matrix> {
        self.check_input(input)?;
        let (t_len, s_len) = (self.lookback, self.horizon);
        let mut out = Matrix::zeros(s_len, self.channels);
        for c in 0..self.channels {
            let g = self.group_of(c);
            let feats = self.features(&input.column(c));
            let bias = self.bias(g);
            for s in 0..s_len {
                let mut acc = bias[s];
                for (which, f) in feats.iter().enumerate() {
                    let w = &self.weights(g, which)[s * t_len..(s + 1) * t_len];
                    acc += w.iter().zip(f).map(|(a, b)| a * b).sum::<f64>();
                }
                out[(s, c)] = acc;
            }
        }
        Ok(out)
    }

    fn backprop(&self, input: &Matrix, upstream: &Matrix, grad: &mut [f64]) -> Result<()> {
        self.check_input(input)?;
        upstream.ensure_shape((self.horizon, self.channels))?;
        if grad.len() != self.params.len() {
            return Err(Error::shape((self.params.len(), 1), (grad.len(), 1)));
        }
        let t_len = self.lookback;
        for c in 0..self.channels {
            let g = self.group_of(c);
            let feats = self.features(&input.column(c));
            for (which, f) in feats.iter().enumerate() {
                let o = self.weight_offset(g, which);
                for s in 0..self.horizon {
                    let u = upstream[(s, c)];
                    if u == 0.0 {
                        continue;
                    }
                    let row = &mut grad[o + s * t_len..o + (s + 1) * t_len];
                    for (gw, x) in row.iter_mut().zip(f) {
                        *gw += u * x;
                    }
                }
            }
            let ob = self.bias_offset(g);
            for s in 0..self.horizon {
                grad[ob + s] += upstream[(s, c)];
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights_copy_input() {
        let n = 6;
        let mut params = vec![0.0; n * n + n];
        for i in 0..n {
            params[i * n + i] = 1.0;
        }
        let m = LinearForecaster::from_params(LinearMode::Plain, n, n, 2, true, params).unwrap();
        let x = Matrix::from_fn(n, 2, |t, c| (t * 3 + c) as f64 - 4.0);
        assert_eq!(m.forecast(&x).unwrap(), x);
    }

    #[test]
    fn constant_input_has_no_remainder() {
        let x = vec![2.5; 30];
        let trend = moving_average(&x, 25);
        assert!(trend.iter().all(|&v| (v - 2.5).abs() < 1e-15));

        let m = LinearForecaster::new(LinearMode::DLINEAR, 30, 4, 1, true, 3).unwrap();
        let input = Matrix::from_vec(30, 1, x).unwrap();
        let out = m.forecast(&input).unwrap();
        for s in 0..4 {
            let w = &m.weights(0, 0)[s * 30..(s + 1) * 30];
            let expected = m.bias(0)[s] + 2.5 * w.iter().sum::<f64>();
            assert!((out[(s, 0)] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn moving_average_replicates_edges() {
        let ma = moving_average(&[0.0, 3.0, 6.0], 3);
        assert_eq!(ma, vec![1.0, 3.0, 5.0]);
    }

    #[test]
    fn kernel_must_be_odd() {
        let bad = LinearForecaster::new(LinearMode::Decomposed { kernel: 4 }, 8, 2, 1, true, 0);
        assert!(matches!(bad, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn wrong_input_shape() {
        let m = LinearForecaster::new(LinearMode::Plain, 8, 2, 3, false, 0).unwrap();
        assert!(matches!(
            m.forecast(&Matrix::zeros(8, 2)),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn init_is_bounded_and_seeded() {
        let a = LinearForecaster::new(LinearMode::Plain, 16, 4, 2, false, 9).unwrap();
        let b = LinearForecaster::new(LinearMode::Plain, 16, 4, 2, false, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.params().iter().all(|p| p.abs() <= 0.25));
        assert_eq!(a.num_params(), 2 * (4 * 16 + 4));
    }
}
