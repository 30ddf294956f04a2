//! Monte Carlo evaluators of the frequency decay functions of two-layer
//! networks with ReLU and tanh activations.
//!
//! Both evaluators average an integrand over samples of the initial
//! parameters `a(0)`, `b(0)` and the tanh scale `r`. The initialisation law is
//! a choice of the caller ([`InitLaw`]): with a sign-symmetric `a(0)` the ReLU
//! expectation is zero in theory, so absolute-value and point-mass laws are
//! offered for plotting curves. Samples are drawn once ([`InitSamples`]) and
//! reused across frequencies, which makes curves monotone by construction.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
#[derive(Default)]
pub enum InitLaw {
    /// `a, b ~ N(0, 1)`, `r ~ |N(0, 1)| + 0.1`.
    #[default]
    Normal,
    /// As `Normal` but with `a ~ |N(0, 1)|`.
    AbsNormal,
    /// Every sample equals the given triple.
    Degenerate { a: f64, b: f64, r: f64 },
}

impl InitLaw {
    /// The unit point mass `a = b = r = 1` used for plotted curves.
    pub const UNIT: InitLaw = InitLaw::Degenerate {
        a: 1.0,
        b: 1.0,
        r: 1.0,
    };
}


#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitSampler {
    pub law: InitLaw,
    pub samples: usize,
    pub seed: u64,
}

impl Default for InitSampler {
    fn default() -> Self {
        InitSampler {
            law: InitLaw::default(),
            samples: 100_000,
            seed: 0,
        }
    }
}

impl InitSampler {
    /// A single draw from the unit point mass; the default for curve plots.
    pub fn unit() -> Self {
        InitSampler {
            law: InitLaw::UNIT,
            samples: 1,
            seed: 0,
        }
    }
}

/// Fixed draws of `(a, b, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitSamples {
    a: Vec<f64>,
    b: Vec<f64>,
    r: Vec<f64>,
}

impl InitSampler {
    pub fn draw(&self) -> Result<InitSamples> {
        if self.samples == 0 {
            return Err(Error::InvalidConfig("sample count must be >= 1".into()));
        }
        let n = self.samples;
        let mut rng = rng::seeded(self.seed);
        let mut normal = || -> f64 { rng.sample(StandardNormal) };
        let (mut a, mut b, mut r) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            match self.law {
                InitLaw::Degenerate { a: a0, b: b0, r: r0 } => {
                    if !(r0 > 0.0) {
                        return Err(Error::InvalidConfig("r must be positive".into()));
                    }
                    a.push(a0);
                    b.push(b0);
                    r.push(r0);
                }
                InitLaw::Normal | InitLaw::AbsNormal => {
                    let av: f64 = normal();
                    a.push(if self.law == InitLaw::AbsNormal { libm::fabs(av) } else { av });
                    b.push(normal());
                    r.push(libm::fabs(normal()) + 0.1);
                }
            }
        }
        Ok(InitSamples { a, b, r })
    }
}

impl InitSamples {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
}

fn estimate(values: impl Iterator<Item = f64>) -> McEstimate {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std_err = if v.len() > 1 {
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        libm::sqrt(var / n)
    } else {
        0.0
    };
    McEstimate { mean, std_err }
}

fn check_xi(xi_norm: f64, dim: usize) -> Result<()> {
    if !(xi_norm > 0.0 && xi_norm.is_finite()) {
        return Err(Error::InvalidFrequency(xi_norm));
    }
    if dim == 0 {
        return Err(Error::InvalidConfig("dimension must be >= 1".into()));
    }
    Ok(())
}

/// `csch(x)^2` for `x > 0`, written as `(2 e^-x / (1 - e^-2x))^2` so it
/// underflows to 0 rather than overflowing.
pub fn csch_sq(x: f64) -> f64 {
    let num = 2.0 * libm::exp(-x);
    let den = -libm::expm1(-2.0 * x);
    let v = num / den;
    v * v
}

/// `E[ a^3 / (16 pi^4 |xi|^(d+3)) + b^2 a / (4 pi^2 |xi|^(d+1)) ]`.
pub fn gamma_relu_sq(xi_norm: f64, dim: usize, samples: &InitSamples) -> Result<McEstimate> {
    check_xi(xi_norm, dim)?;
    let p3 = libm::pow(xi_norm, dim as f64 + 3.0);
    let p1 = libm::pow(xi_norm, dim as f64 + 1.0);
    let c3 = 16.0 * libm::pow(PI, 4.0);
    let c1 = 4.0 * PI * PI;
    Ok(estimate(samples.a.iter().zip(&samples.b).map(|(&a, &b)| {
        a * a * a / (c3 * p3) + b * b * a / (c1 * p1)
    })))
}

/// `|xi|^-(d-1) E[ (pi^2 / r + 4 pi^4 a^2 |xi|^2 / r^3) csch^2(pi |xi| / r) ]`.
pub fn gamma_tanh_sq(xi_norm: f64, dim: usize, samples: &InitSamples) -> Result<McEstimate> {
    check_xi(xi_norm, dim)?;
    let lead = libm::pow(xi_norm, -(dim as f64 - 1.0));
    let pi4 = libm::pow(PI, 4.0);
    Ok(estimate(samples.a.iter().zip(&samples.r).map(|(&a, &r)| {
        let cs = csch_sq(PI * xi_norm / r);
        if cs == 0.0 {
            return 0.0;
        }
        lead * (PI * PI / r + 4.0 * pi4 * a * a * xi_norm * xi_norm / (r * r * r)) * cs
    })))
}

/// One row of a decay curve table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecaySample {
    pub xi_norm: f64,
    pub dim: usize,
    pub relu: f64,
    pub tanh: f64,
}

/// Both decay functions on `points` log-spaced norms in `[lo, hi]`.
pub fn decay_curves(
    lo: f64,
    hi: f64,
    points: usize,
    dim: usize,
    sampler: &InitSampler,
) -> Result<Vec<DecaySample>> {
    if !(lo > 0.0 && hi >= lo) || points == 0 {
        return Err(Error::InvalidConfig("need 0 < lo <= hi and points >= 1".into()));
    }
    let samples = sampler.draw()?;
    let (llo, lhi) = (libm::log(lo), libm::log(hi));
    (0..points)
        .map(|i| {
            let t = if points == 1 { 0.0 } else { i as f64 / (points - 1) as f64 };
            let xi = libm::exp(llo + t * (lhi - llo));
            Ok(DecaySample {
                xi_norm: xi,
                dim,
                relu: gamma_relu_sq(xi, dim, &samples)?.mean,
                tanh: gamma_tanh_sq(xi, dim, &samples)?.mean,
            })
        })
        .collect()
}
