//! Frequency-enhanced loss functions and hand-differentiated forecasters.
//!
//! Everything in this crate is pure computation over owned buffers. It builds
//! without `std` (only `alloc` is required); file formats, the command line and
//! parallel sweeps live in the `frele-lab` companion crate.
//!
//! Module map:
//!
//! * [`series`]: multichannel containers, chronological splits, scaling, windows
//! * [`spectral`]: real-input DFT (oracle and fast path), bands, band RMSE
//! * [`loss`]: the combined time/frequency loss with implicit peak rescaling
//! * [`models`]: linear (DLinear-style) forecaster and a two-layer MLP
//! * [`trainer`]: Adam, seeded mini-batch training, early stopping, evaluation
//! * [`diagnostics`]: spectral-bias reports, frequency trajectories, sweeps
//! * [`theory`]: Monte Carlo evaluators of activation decay functions
//! * [`synthetic`]: sine-sum signal generator
#![no_std]
// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod diagnostics;
pub mod error;
pub mod loss;
pub mod matrix;
pub mod models;
pub mod rng;
pub mod series;
pub mod spectral;
pub mod synthetic;
pub mod theory;
pub mod trainer;

pub use error::{Error, Result};
pub use matrix::Matrix;
