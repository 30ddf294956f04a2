//! Combined time/frequency forecasting loss.
//!
//! For a target `X` and prediction `X̂` (both `S x C`, time along rows) the
//! loss is
//!
//! ```text
//! combined = delta * freq_loss + (1 - delta) * time_loss
//! ```
//!
//! where `freq_loss` is the mean complex modulus `|F[k] - F̂[k]|` over the
//! one-sided spectra of every channel. Before the comparison the spectra can
//! be reshaped:
//!
//! 1. amplitude pruning: bins whose *target* modulus falls under a threshold
//!    are zeroed in both spectra;
//! 2. implicit rescaling: bins that are local maxima of the target amplitude
//!    within a window of width `d` are multiplied by `i / eta` in both spectra
//!    (`i` is the bin index; DC is never selected);
//! 3. adaptive normalisation (ablation): every bin of both spectra is divided
//!    by `|F[k]| + 1e-8`.
//!
//! Every reshaping step is a fixed real scale per bin that depends only on
//! the target, so the gradient with respect to `X̂` is exact.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spectral::{bin_count, RealFft, Spectrum};

/// Offset added to target amplitudes in the adaptive-normalisation ablation.
pub const AN_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeLossKind {
    Mae,
    #[default]
    Mse,
}

/// Loss configuration. `eta = None` means "use the bin count `B`".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FreleConfig {
    pub delta: f64,
    pub width: usize,
    pub eta: Option<f64>,
    pub implicit_enabled: bool,
    pub an_enabled: bool,
    pub epsilon_xi: Option<f64>,
    /// Fraction of bins kept by amplitude pruning; overrides `epsilon_xi`
    /// with a per-spectrum threshold from [`threshold_for_retention`].
    pub retention: Option<f64>,
    pub time_loss: TimeLossKind,
}

impl Default for FreleConfig {
    fn default() -> Self {
        FreleConfig {
            delta: 0.3,
            width: 5,
            eta: None,
            implicit_enabled: true,
            an_enabled: false,
            epsilon_xi: None,
            retention: None,
            time_loss: TimeLossKind::Mse,
        }
    }
}

impl FreleConfig {
    /// Pure time-domain loss.
    pub fn time_only(kind: TimeLossKind) -> Self {
        FreleConfig {
            delta: 0.0,
            implicit_enabled: false,
            time_loss: kind,
            ..FreleConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidConfig("delta must lie in [0, 1]".into()));
        }
        if self.width == 0 {
            return Err(Error::InvalidConfig("frequency width d must be >= 1".into()));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::InvalidConfig("eta must be positive".into()));
            }
        }
        if self.implicit_enabled && self.an_enabled {
            return Err(Error::InvalidConfig(
                "implicit rescaling and adaptive normalisation are mutually exclusive".into(),
            ));
        }
        if let Some(eps) = self.epsilon_xi {
            if !(eps >= 0.0) {
                return Err(Error::InvalidConfig("epsilon_xi must be >= 0".into()));
            }
        }
        if let Some(r) = self.retention {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidConfig("retention must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn eta_for(&self, bins: usize) -> f64 {
        self.eta.unwrap_or(bins as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub time_loss: f64,
    pub freq_loss: f64,
    pub combined: f64,
}

impl LossBreakdown {
    pub fn combine(delta: f64, time_loss: f64, freq_loss: f64) -> Self {
        LossBreakdown {
            time_loss,
            freq_loss,
            combined: delta * freq_loss + (1.0 - delta) * time_loss,
        }
    }
}

/// Mean absolute or squared error and its gradient with respect to `pred`.
pub fn time_loss(target: &Matrix, pred: &Matrix, kind: TimeLossKind) -> Result<(f64, Matrix)> {
    pred.ensure_shape(target.shape())?;
    let n = target.as_slice().len();
    if n == 0 {
        return Err(Error::NoData);
    }
    let inv = 1.0 / n as f64;
    let mut grad = Matrix::zeros(target.rows(), target.cols());
    let mut total = 0.0;
    for ((g, &x), &xh) in grad
        .as_mut_slice()
        .iter_mut()
        .zip(target.as_slice())
        .zip(pred.as_slice())
    {
        let e = xh - x;
        match kind {
            TimeLossKind::Mae => {
                total += libm::fabs(e);
                *g = if e > 0.0 {
                    inv
                } else if e < 0.0 {
                    -inv
                } else {
                    0.0
                };
            }
            TimeLossKind::Mse => {
                total += e * e;
                *g = 2.0 * e * inv;
            }
        }
    }
    Ok((total * inv, grad))
}

/// Indices `i >= 1` whose amplitude equals the maximum over the window
/// `[i - floor(d/2), i + ceil(d/2)]`, clipped to `[0, B)`. Equality counts,
/// so plateaus yield several maxima. Bin 0 takes part as a neighbour only.
pub fn local_maxima(amplitudes: &[f64], width: usize) -> Vec<usize> {
    let b = amplitudes.len();
    let lo = width / 2;
    let hi = width - lo;
    (1..b)
        .filter(|&i| {
            let start = i.saturating_sub(lo);
            let end = (i + hi).min(b - 1);
            let peak = amplitudes[start..=end]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            amplitudes[i] == peak
        })
        .collect()
}

/// Multiplies bin `i` by `i / eta` for every `i` in `maxima`.
pub fn implicit_rescale(s: &Spectrum, maxima: &[usize], eta: f64) -> Result<Spectrum> {
    if !(eta > 0.0) {
        return Err(Error::InvalidConfig("eta must be positive".into()));
    }
    let mut out = s.clone();
    let b = out.bins().len();
    for &i in maxima {
        if i == 0 || i >= b {
            return Err(Error::InvalidIndex(i));
        }
        out.bins_mut()[i] *= i as f64 / eta;
    }
    Ok(out)
}

/// Mean of `|F[k] - F̂[k]|` over every bin of every spectrum.
pub fn freq_loss(target: &[Spectrum], pred: &[Spectrum]) -> Result<f64> {
    if target.len() != pred.len() {
        return Err(Error::shape((target.len(), 1), (pred.len(), 1)));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (f, fh) in target.iter().zip(pred) {
        if f.bins().len() != fh.bins().len() {
            return Err(Error::shape((f.bins().len(), 1), (fh.bins().len(), 1)));
        }
        for (a, b) in f.bins().iter().zip(fh.bins()) {
            total += (a - b).norm();
        }
        count += f.bins().len();
    }
    if count == 0 {
        return Err(Error::NoData);
    }
    Ok(total / count as f64)
}

/// Zeroes every bin with modulus `< epsilon_xi`; returns the surviving
/// fraction of bins.
pub fn amplitude_filter(s: &Spectrum, epsilon_xi: f64) -> (Spectrum, f64) {
    let mut out = s.clone();
    let mut kept = 0usize;
    for z in out.bins_mut() {
        if z.norm() < epsilon_xi {
            *z = Complex64::new(0.0, 0.0);
        } else {
            kept += 1;
        }
    }
    let frac = kept as f64 / out.bins().len() as f64;
    (out, frac)
}

/// Smallest threshold whose surviving fraction is at most `retention`:
/// with `keep = floor(retention * B)` it is the next float above the
/// `(keep + 1)`-th largest amplitude, or 0 when every bin may stay.
pub fn threshold_for_retention(amplitudes: &[f64], retention: f64) -> f64 {
    let b = amplitudes.len();
    let keep = (libm::floor(retention * b as f64 + 1e-9) as usize).min(b);
    if keep >= b {
        return 0.0;
    }
    let mut sorted = amplitudes.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted[keep].next_up()
}

/// Loss evaluator bound to one horizon length; holds the FFT plan.
#[derive(Debug, Clone)]
pub struct FreleLoss {
    cfg: FreleConfig,
    fft: RealFft,
}

impl FreleLoss {
    pub fn new(cfg: FreleConfig, horizon: usize) -> Result<Self> {
        cfg.validate()?;
        if horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be positive".into()));
        }
        Ok(FreleLoss {
            cfg,
            fft: RealFft::new(horizon),
        })
    }

    pub fn config(&self) -> &FreleConfig {
        &self.cfg
    }

    pub fn horizon(&self) -> usize {
        self.fft.len()
    }

    fn check(&self, target: &Matrix, pred: &Matrix) -> Result<()> {
        pred.ensure_shape(target.shape())?;
        if target.rows() != self.horizon() {
            return Err(Error::shape((self.horizon(), target.cols()), target.shape()));
        }
        if target.cols() == 0 {
            return Err(Error::NoData);
        }
        Ok(())
    }

    /// Real per-bin factors applied to both spectra of one channel.
    fn bin_scales(&self, target: &Spectrum) -> Vec<f64> {
        let amps = target.amplitudes();
        let b = amps.len();
        let mut scale = vec![1.0; b];
        if self.cfg.implicit_enabled {
            let eta = self.cfg.eta_for(b);
            for i in local_maxima(&amps, self.cfg.width) {
                scale[i] = i as f64 / eta;
            }
        }
        if self.cfg.an_enabled {
            for (s, a) in scale.iter_mut().zip(&amps) {
                *s /= a + AN_EPSILON;
            }
        }
        let threshold = match (self.cfg.retention, self.cfg.epsilon_xi) {
            (Some(r), _) => Some(threshold_for_retention(&amps, r)),
            (None, eps) => eps,
        };
        if let Some(eps) = threshold {
            for (s, a) in scale.iter_mut().zip(&amps) {
                if *a < eps {
                    *s = 0.0;
                }
            }
        }
        scale
    }

    /// Frequency term and, optionally, its gradient.
    fn frequency_term(&self, target: &Matrix, pred: &Matrix, grad: Option<&mut Matrix>) -> f64 {
        let channels = target.cols();
        let b = bin_count(self.horizon());
        let inv = 1.0 / (b * channels) as f64;
        let mut total = 0.0;
        let mut grad = grad;
        let mut g = vec![Complex64::new(0.0, 0.0); b];
        for c in 0..channels {
            let f = self.fft.forward_unchecked(&target.column(c));
            let fh = self.fft.forward_unchecked(&pred.column(c));
            let scale = self.bin_scales(&f);
            for k in 0..b {
                let diff = (fh.bins()[k] - f.bins()[k]) * scale[k];
                let m = diff.norm();
                total += m;
                g[k] = if m > 0.0 {
                    diff * (scale[k] * inv / m)
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
            if let Some(out) = grad.as_deref_mut() {
                out.set_column(c, &self.fft.adjoint(&g));
            }
        }
        total * inv
    }

    pub fn evaluate(&self, target: &Matrix, pred: &Matrix) -> Result<LossBreakdown> {
        self.check(target, pred)?;
        let (t, _) = time_loss(target, pred, self.cfg.time_loss)?;
        let f = self.frequency_term(target, pred, None);
        Ok(LossBreakdown::combine(self.cfg.delta, t, f))
    }

    /// Loss together with `d combined / d pred`.
    pub fn evaluate_with_grad(&self, target: &Matrix, pred: &Matrix) -> Result<(LossBreakdown, Matrix)> {
        self.check(target, pred)?;
        let delta = self.cfg.delta;
        let (t, mut grad) = time_loss(target, pred, self.cfg.time_loss)?;
        let f = if delta == 0.0 {
            self.frequency_term(target, pred, None)
        } else {
            let mut fgrad = Matrix::zeros(target.rows(), target.cols());
            let f = self.frequency_term(target, pred, Some(&mut fgrad));
            for (g, fg) in grad.as_mut_slice().iter_mut().zip(fgrad.as_slice()) {
                *g = delta * fg + (1.0 - delta) * *g;
            }
            f
        };
        Ok((LossBreakdown::combine(delta, t, f), grad))
    }
}

/// One-shot loss evaluation; see [`FreleLoss`] for repeated use.
pub fn frele_loss(target: &Matrix, pred: &Matrix, cfg: &FreleConfig) -> Result<LossBreakdown> {
    FreleLoss::new(*cfg, target.rows())?.evaluate(target, pred)
}

/// Gradient of [`frele_loss`]'s combined value with respect to `pred`.
pub fn frele_gradient(target: &Matrix, pred: &Matrix, cfg: &FreleConfig) -> Result<Matrix> {
    Ok(FreleLoss::new(*cfg, target.rows())?
        .evaluate_with_grad(target, pred)?
        .1)
}
