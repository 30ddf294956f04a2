//! Adam, seeded mini-batch training with early stopping, and evaluation.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{FreleConfig, FreleLoss, LossBreakdown};
use crate::matrix::Matrix;
use crate::models::Forecaster;
use crate::rng;
use crate::series::WindowPair;
use crate::spectral::{BandAccumulator, BandPartition, BandReport, RealFft};

/// Adam optimiser state for one flat parameter buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(lr: f64, num_params: usize) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::shape((self.m.len(), 1), (params.len(), grads.len())));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - libm::pow(self.beta1, t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, t as f64);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.lr * m_hat / (libm::sqrt(v_hat) + self.eps);
        }
        Ok(())
    }
}

/// Free-function form of [`AdamState::step`].
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64]) -> Result<()> {
    state.step(params, grads)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 32,
            lr: 0.005,
            patience: 3,
            seed: 2024,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig("lr must be a finite non-negative number".into()));
        }
        Ok(())
    }
}

/// Time-domain error of a forecast.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train: LossBreakdown,
    pub val: LossBreakdown,
    pub val_metrics: Option<Metrics>,
    pub val_bands: Option<BandReport>,
    /// Seconds since training started, as reported by the caller's clock.
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: M,
    pub logs: Vec<EpochLog>,
    pub best_epoch: usize,
}

/// Mini-batch trainer for any [`Forecaster`].
pub struct Trainer<'a> {
    loss_cfg: FreleConfig,
    cfg: TrainConfig,
    bands: Option<BandPartition>,
    clock: Option<&'a dyn Fn() -> f64>,
}

impl<'a> Trainer<'a> {
    pub fn new(loss_cfg: FreleConfig, cfg: TrainConfig) -> Self {
        Trainer {
            loss_cfg,
            cfg,
            bands: None,
            clock: None,
        }
    }

    /// Records a band report and time-domain metrics on validation every epoch.
    pub fn track_bands(mut self, partition: BandPartition) -> Self {
        self.bands = Some(partition);
        self
    }

    /// Wall-clock source in seconds; without one, `wall_time` stays 0.
    pub fn with_clock(mut self, clock: &'a dyn Fn() -> f64) -> Self {
        self.clock = Some(clock);
        self
    }

    pub fn fit<M: Forecaster + Clone>(
        &self,
        mut model: M,
        train: &[WindowPair],
        val: &[WindowPair],
    ) -> Result<TrainOutcome<M>> {
        self.cfg.validate()?;
        if train.is_empty() || val.is_empty() {
            return Err(Error::NoData);
        }
        let loss = FreleLoss::new(self.loss_cfg, model.horizon())?;
        let now = || self.clock.map_or(0.0, |c| c());
        let start = now();

        let n_params = model.num_params();
        let mut adam = AdamState::new(self.cfg.lr, n_params);
        let mut rng = rng::seeded(self.cfg.seed);
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut grad = vec![0.0; n_params];

        let mut logs = Vec::new();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        let mut stale = 0usize;

        for epoch in 0..self.cfg.epochs {
            if self.cfg.shuffle {
                order.shuffle(&mut rng);
            }
            let mut sum = LossBreakdown::default();
            for batch in order.chunks(self.cfg.batch_size) {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let inv = 1.0 / batch.len() as f64;
                for &i in batch {
                    let w = &train[i];
                    let pred = model.forecast(&w.input)?;
                    let (lb, mut g) = loss.evaluate_with_grad(&w.target, &pred)?;
                    accumulate(&mut sum, &lb);
                    g.as_mut_slice().iter_mut().for_each(|v| *v *= inv);
                    model.backprop(&w.input, &g, &mut grad)?;
                }
                adam.step(model.params_mut(), &grad)?;
            }
            let train_loss = scale(&sum, 1.0 / train.len() as f64);
            let pass = validation_pass(&model, val, &loss, self.bands.as_ref())?;
            logs.push(EpochLog {
                epoch,
                train: train_loss,
                val: pass.loss,
                val_metrics: self.bands.as_ref().map(|_| pass.metrics),
                val_bands: pass.bands,
                wall_time: now() - start,
            });

            let improved = best.as_ref().is_none_or(|(b, _, _)| pass.loss.combined < *b);
            if improved {
                best = Some((pass.loss.combined, epoch, model.params().to_vec()));
                stale = 0;
            } else {
                stale += 1;
                if self.cfg.patience > 0 && stale >= self.cfg.patience {
                    break;
                }
            }
        }

        let (_, best_epoch, params) = best.expect("at least one epoch ran");
        model.params_mut().copy_from_slice(&params);
        Ok(TrainOutcome {
            model,
            logs,
            best_epoch,
        })
    }
}

fn accumulate(sum: &mut LossBreakdown, lb: &LossBreakdown) {
    sum.time_loss += lb.time_loss;
    sum.freq_loss += lb.freq_loss;
    sum.combined += lb.combined;
}

fn scale(lb: &LossBreakdown, k: f64) -> LossBreakdown {
    LossBreakdown {
        time_loss: lb.time_loss * k,
        freq_loss: lb.freq_loss * k,
        combined: lb.combined * k,
    }
}

struct ValidationPass {
    loss: LossBreakdown,
    metrics: Metrics,
    bands: Option<BandReport>,
}

fn validation_pass<M: Forecaster>(
    model: &M,
    windows: &[WindowPair],
    loss: &FreleLoss,
    bands: Option<&BandPartition>,
) -> Result<ValidationPass> {
    let mut sum = LossBreakdown::default();
    let mut metrics = MetricAccumulator::default();
    let mut acc = bands.map(|p| (BandAccumulator::new(p.clone()), RealFft::new(model.horizon())));
    for w in windows {
        let pred = model.forecast(&w.input)?;
        accumulate(&mut sum, &loss.evaluate(&w.target, &pred)?);
        metrics.add(&w.target, &pred);
        if let Some((acc, fft)) = acc.as_mut() {
            for c in 0..pred.cols() {
                acc.add(
                    &fft.forward_unchecked(&w.target.column(c)),
                    &fft.forward_unchecked(&pred.column(c)),
                )?;
            }
        }
    }
    Ok(ValidationPass {
        loss: scale(&sum, 1.0 / windows.len() as f64),
        metrics: metrics.finish(),
        bands: acc.map(|(a, _)| a.finish()),
    })
}

#[derive(Default)]
struct MetricAccumulator {
    se: f64,
    ae: f64,
    count: usize,
}

impl MetricAccumulator {
    fn add(&mut self, target: &Matrix, pred: &Matrix) {
        for (t, p) in target.as_slice().iter().zip(pred.as_slice()) {
            let e = p - t;
            self.se += e * e;
            self.ae += libm::fabs(e);
        }
        self.count += target.as_slice().len();
    }

    fn finish(&self) -> Metrics {
        let n = self.count.max(1) as f64;
        Metrics {
            mse: self.se / n,
            mae: self.ae / n,
        }
    }
}

/// MSE and MAE over every horizon step, channel and window.
pub fn evaluate<M: Forecaster>(model: &M, windows: &[WindowPair]) -> Result<Metrics> {
    if windows.is_empty() {
        return Err(Error::NoData);
    }
    let mut acc = MetricAccumulator::default();
    for w in windows {
        let pred = model.forecast(&w.input)?;
        acc.add(&w.target, &pred);
    }
    Ok(acc.finish())
}

/// Mean loss breakdown of `model` over `windows` under `cfg`.
pub fn evaluate_loss<M: Forecaster>(
    model: &M,
    windows: &[WindowPair],
    cfg: &FreleConfig,
) -> Result<LossBreakdown> {
    if windows.is_empty() {
        return Err(Error::NoData);
    }
    let loss = FreleLoss::new(*cfg, model.horizon())?;
    let mut sum = LossBreakdown::default();
    for w in windows {
        let pred = model.forecast(&w.input)?;
        accumulate(&mut sum, &loss.evaluate(&w.target, &pred)?);
    }
    Ok(scale(&sum, 1.0 / windows.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_adam_step() {
        let mut adam = AdamState::new(0.01, 1);
        let mut p = [0.5];
        adam.step(&mut p, &[1.0]).unwrap();
        let expected = 0.5 - 0.01 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15);
        assert_eq!(adam.steps(), 1);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut adam = AdamState::new(0.1, 3);
        let mut p = [1.0, -2.0, 3.0];
        for _ in 0..50 {
            adam.step(&mut p, &[0.0; 3]).unwrap();
        }
        assert_eq!(p, [1.0, -2.0, 3.0]);
    }

    #[test]
    fn adam_shape_mismatch() {
        let mut adam = AdamState::new(0.1, 3);
        assert!(adam.step(&mut [0.0; 2], &[0.0; 2]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { epochs: 0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { lr: f64::NAN, ..TrainConfig::default() }.validate().is_err());
    }
}
