//! Spectral-bias measurements and the sweep experiments built on the trainer.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{FreleConfig, LossBreakdown};
use crate::models::{Activation, BatchWorkspace, Forecaster, LinearForecaster, LinearMode, Mlp};
use crate::series::WindowPair;
use crate::spectral::{BandAccumulator, BandPartition, BandReport, RealFft};
use crate::synthetic::{gen_sine_sum, SineSumSpec};
use crate::trainer::{evaluate, evaluate_loss, AdamState, EpochLog, Metrics, TrainConfig, Trainer};

/// Band RMSE between target and forecast spectra over all test windows and
/// channels.
pub fn spectral_bias_report<M: Forecaster>(
    model: &M,
    windows: &[WindowPair],
    partition: &BandPartition,
) -> Result<BandReport> {
    if windows.is_empty() {
        return Err(Error::NoData);
    }
    let fft = RealFft::new(model.horizon());
    let mut acc = BandAccumulator::new(partition.clone());
    for w in windows {
        let pred = model.forecast(&w.input)?;
        for c in 0..pred.cols() {
            acc.add(
                &fft.forward(&w.target.column(c))?,
                &fft.forward(&pred.column(c))?,
            )?;
        }
    }
    Ok(acc.finish())
}

/// One row of a bias profile: validation band RMSE and time-domain metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub epoch: usize,
    pub bands: BandReport,
    pub metrics: Metrics,
}

/// Per-epoch band reports collected during training.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BiasProfile {
    pub rows: Vec<BiasRow>,
}

impl BiasProfile {
    /// Requires logs produced by a trainer with band tracking enabled.
    pub fn from_logs(logs: &[EpochLog]) -> Result<Self> {
        let rows = logs
            .iter()
            .enumerate()
            .map(|(i, log)| match (log.val_bands, log.val_metrics) {
                (Some(bands), Some(metrics)) if log.epoch == i => Ok(BiasRow {
                    epoch: log.epoch,
                    bands,
                    metrics,
                }),
                _ => Err(Error::InvalidInput(
                    "epoch logs lack band tracking or are not contiguous".into(),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BiasProfile { rows })
    }
}

/// Relative amplitude error `|A_pred - A_true| / A_true` at chosen bins,
/// recorded at a sequence of training iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTrajectory {
    /// Target frequencies in cycles per probe window (integer bins).
    pub freqs: Vec<f64>,
    pub iterations: Vec<usize>,
    /// `errors[row][j]` belongs to `iterations[row]` and `freqs[j]`.
    pub errors: Vec<Vec<f64>>,
}

/// Compares model outputs on a probe against the true probe signal.
#[derive(Debug, Clone)]
pub struct TrajectoryProbe {
    fft: RealFft,
    bins: Vec<usize>,
    freqs: Vec<f64>,
    true_amps: Vec<f64>,
}

impl TrajectoryProbe {
    pub fn new(truth: &[f64], target_freqs: &[f64]) -> Result<Self> {
        let fft = RealFft::new(truth.len());
        let spectrum = fft.forward(truth)?;
        let mut bins = Vec::with_capacity(target_freqs.len());
        for &f in target_freqs {
            let k = libm::round(f);
            if !(f >= 0.0) || libm::fabs(f - k) > 1e-9 || k as usize >= fft.bins() {
                return Err(Error::NonIntegerFrequency(f));
            }
            bins.push(k as usize);
        }
        let amps = spectrum.amplitudes();
        let true_amps: Vec<f64> = bins.iter().map(|&k| amps[k]).collect();
        if true_amps.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::InvalidInput("target bin has zero true amplitude".into()));
        }
        Ok(TrajectoryProbe {
            fft,
            bins,
            freqs: target_freqs.to_vec(),
            true_amps,
        })
    }

    pub fn errors(&self, outputs: &[f64]) -> Result<Vec<f64>> {
        let amps = self.fft.forward(outputs)?.amplitudes();
        Ok(self
            .bins
            .iter()
            .zip(&self.true_amps)
            .map(|(&k, &a)| libm::fabs(amps[k] - a) / a)
            .collect())
    }

    pub fn empty_trajectory(&self) -> FrequencyTrajectory {
        FrequencyTrajectory {
            freqs: self.freqs.clone(),
            iterations: Vec::new(),
            errors: Vec::new(),
        }
    }
}

impl FrequencyTrajectory {
    pub fn push(&mut self, iteration: usize, errors: Vec<f64>) {
        self.iterations.push(iteration);
        self.errors.push(errors);
    }

    /// First recorded iteration at which the error of `freqs[j]` is below
    /// `threshold`.
    pub fn first_below(&self, j: usize, threshold: f64) -> Option<usize> {
        self.iterations
            .iter()
            .zip(&self.errors)
            .find(|(_, e)| e[j] < threshold)
            .map(|(&it, _)| it)
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.errors.last().map(Vec::as_slice)
    }
}

/// Trajectory of a sequence of MLP snapshots evaluated on `probe_inputs`
/// (one scalar input per sample) against `truth`.
pub fn frequency_trajectory(
    snapshots: &[(usize, Mlp)],
    probe_inputs: &[f64],
    truth: &[f64],
    target_freqs: &[f64],
) -> Result<FrequencyTrajectory> {
    if probe_inputs.len() != truth.len() {
        return Err(Error::shape((truth.len(), 1), (probe_inputs.len(), 1)));
    }
    let probe = TrajectoryProbe::new(truth, target_freqs)?;
    let mut traj = probe.empty_trajectory();
    for (iteration, model) in snapshots {
        let outputs = probe_inputs
            .iter()
            .map(|&x| model.forward(&[x]).map(|o| o[0]))
            .collect::<Result<Vec<_>>>()?;
        traj.push(*iteration, probe.errors(&outputs)?);
    }
    Ok(traj)
}

/// Full-batch regression of a sine sum by a two-layer network, recording
/// how fast each component's amplitude is fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralBiasExperiment {
    pub signal: SineSumSpec,
    pub hidden: usize,
    pub activation: Activation,
    pub lr: f64,
    pub iterations: usize,
    pub record_every: usize,
    pub seed: u64,
}

impl Default for SpectralBiasExperiment {
    fn default() -> Self {
        SpectralBiasExperiment {
            signal: SineSumSpec::default(),
            hidden: 256,
            activation: Activation::Relu,
            lr: 3e-3,
            iterations: 10_000,
            record_every: 50,
            seed: 0,
        }
    }
}

/// Output of [`SpectralBiasExperiment::run`].
#[derive(Debug, Clone)]
pub struct SpectralBiasRun {
    pub trajectory: FrequencyTrajectory,
    pub model: Mlp,
    /// Full-batch MSE at every recorded iteration.
    pub losses: Vec<f64>,
}

impl SpectralBiasExperiment {
    /// Inputs rescaled from `[x_0, x_{n-1}]` to `[-1, 1]`.
    pub fn inputs(&self) -> Vec<f64> {
        let xs = self.signal.abscissae();
        let (lo, hi) = (xs[0], xs[xs.len() - 1]);
        xs.iter().map(|x| 2.0 * (x - lo) / (hi - lo) - 1.0).collect()
    }

    pub fn target_freqs(&self) -> Vec<f64> {
        self.signal
            .angular_frequencies
            .iter()
            .map(|&w| self.signal.bin_of(w))
            .collect()
    }

    pub fn run(&self) -> Result<SpectralBiasRun> {
        if self.record_every == 0 || self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations and record_every must be positive".into()));
        }
        let truth_series = gen_sine_sum(&SineSumSpec {
            noise_std: 0.0,
            ..self.signal.clone()
        })?;
        let truth = truth_series.channel(0).to_vec();
        let targets = gen_sine_sum(&self.signal)?.channel(0).to_vec();
        let inputs = self.inputs();
        let probe = TrajectoryProbe::new(&truth, &self.target_freqs())?;

        let mut model = Mlp::new(1, self.hidden, 1, self.activation, self.seed)?;
        let mut adam = AdamState::new(self.lr, model.params().len());
        let mut grad = vec![0.0; model.params().len()];
        let mut trajectory = probe.empty_trajectory();
        let mut losses = Vec::new();
        let inv = 1.0 / inputs.len() as f64;

        let mut ws = BatchWorkspace::default();
        let mut upstream = vec![0.0; inputs.len()];
        let mut outputs = model.forward_batch(&inputs, &mut ws)?;
        for it in 0..=self.iterations {
            if it % self.record_every == 0 {
                trajectory.push(it, probe.errors(&outputs)?);
                let mse = outputs.iter().zip(&targets).map(|(o, y)| (o - y) * (o - y)).sum::<f64>() * inv;
                losses.push(mse);
            }
            if it == self.iterations {
                break;
            }
            for ((u, o), y) in upstream.iter_mut().zip(&outputs).zip(&targets) {
                *u = 2.0 * (o - y) * inv;
            }
            grad.iter_mut().for_each(|g| *g = 0.0);
            model.backward_batch(&inputs, &upstream, &mut grad, &mut ws)?;
            adam.step(model.params_mut(), &grad)?;
            outputs = model.forward_batch(&inputs, &mut ws)?;
        }
        Ok(SpectralBiasRun {
            trajectory,
            model,
            losses,
        })
    }
}

/// Which linear forecaster an [`Experiment`] trains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub mode: LinearMode,
    pub channel_shared: bool,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            mode: LinearMode::DLINEAR,
            channel_shared: true,
        }
    }
}

/// Train/validation/test windows plus a training recipe; the unit of work
/// behind every sweep.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub model: ModelSpec,
    pub train: Vec<WindowPair>,
    pub val: Vec<WindowPair>,
    pub test: Vec<WindowPair>,
    pub train_cfg: TrainConfig,
}

/// Result of one train + evaluate run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub loss_cfg: FreleConfig,
    pub metrics: Metrics,
    /// Test-set loss components under `loss_cfg`.
    pub test_loss: LossBreakdown,
    pub best_epoch: usize,
    pub logs: Vec<EpochLog>,
    pub model: LinearForecaster,
}

impl Experiment {
    fn shape(&self) -> Result<(usize, usize, usize)> {
        let w = self.train.first().ok_or(Error::NoData)?;
        Ok((w.lookback(), w.horizon(), w.channels()))
    }

    pub fn build_model(&self, seed: u64) -> Result<LinearForecaster> {
        let (t, s, c) = self.shape()?;
        LinearForecaster::new(self.model.mode, t, s, c, self.model.channel_shared, seed)
    }

    /// Trains from a fresh initialisation and evaluates on the test windows.
    /// `seed` drives both the initialisation and the batch order.
    pub fn run(&self, loss_cfg: &FreleConfig, seed: u64) -> Result<RunResult> {
        self.run_with(loss_cfg, seed, None, None)
    }

    pub fn run_with(
        &self,
        loss_cfg: &FreleConfig,
        seed: u64,
        bands: Option<BandPartition>,
        clock: Option<&dyn Fn() -> f64>,
    ) -> Result<RunResult> {
        if self.test.is_empty() {
            return Err(Error::NoData);
        }
        let model = self.build_model(seed)?;
        let cfg = TrainConfig {
            seed,
            ..self.train_cfg
        };
        let mut trainer = Trainer::new(*loss_cfg, cfg);
        if let Some(p) = bands {
            trainer = trainer.track_bands(p);
        }
        if let Some(c) = clock {
            trainer = trainer.with_clock(c);
        }
        let outcome = trainer.fit(model, &self.train, &self.val)?;
        Ok(RunResult {
            seed,
            loss_cfg: *loss_cfg,
            metrics: evaluate(&outcome.model, &self.test)?,
            test_loss: evaluate_loss(&outcome.model, &self.test, loss_cfg)?,
            best_epoch: outcome.best_epoch,
            logs: outcome.logs,
            model: outcome.model,
        })
    }
}

/// The hyper-parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Loss balance `delta`.
    Delta,
    /// Amplitude-pruning retention fraction `num`.
    Retention,
}

impl SweepKind {
    pub fn apply(&self, base: &FreleConfig, value: f64) -> FreleConfig {
        match self {
            SweepKind::Delta => FreleConfig { delta: value, ..*base },
            SweepKind::Retention => FreleConfig {
                retention: Some(value),
                ..*base
            },
        }
    }

    fn check(&self, value: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidConfig(alloc::format!(
                "sweep value {value} outside [0, 1]"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub grid_value: f64,
    pub seed: u64,
    pub mse: f64,
    pub mae: f64,
    pub time_loss: f64,
    pub freq_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub records: Vec<SweepRecord>,
    /// Index of the record with the lowest test MSE.
    pub argmin: usize,
}

impl SweepResult {
    pub fn from_records(kind: SweepKind, records: Vec<SweepRecord>) -> Result<Self> {
        let argmin = records
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.mse.total_cmp(&b.1.mse))
            .map(|(i, _)| i)
            .ok_or(Error::NoData)?;
        Ok(SweepResult {
            kind,
            records,
            argmin,
        })
    }

    pub fn best(&self) -> &SweepRecord {
        &self.records[self.argmin]
    }
}

/// Seed of grid point `index`.
pub fn point_seed(base_seed: u64, index: usize) -> u64 {
    base_seed.wrapping_add(index as u64)
}

/// Runs one grid point in isolation; the same call reproduces it exactly.
pub fn sweep_point(
    exp: &Experiment,
    base: &FreleConfig,
    kind: SweepKind,
    index: usize,
    value: f64,
) -> Result<SweepRecord> {
    kind.check(value)?;
    let cfg = kind.apply(base, value);
    let seed = point_seed(exp.train_cfg.seed, index);
    let run = exp.run(&cfg, seed)?;
    Ok(SweepRecord {
        grid_value: value,
        seed,
        mse: run.metrics.mse,
        mae: run.metrics.mae,
        time_loss: run.test_loss.time_loss,
        freq_loss: run.test_loss.freq_loss,
    })
}

fn run_sweep(exp: &Experiment, base: &FreleConfig, kind: SweepKind, grid: &[f64]) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty sweep grid".into()));
    }
    let records = grid
        .iter()
        .enumerate()
        .map(|(i, &v)| sweep_point(exp, base, kind, i, v))
        .collect::<Result<Vec<_>>>()?;
    SweepResult::from_records(kind, records)
}

/// Train + evaluate once per `delta` in `grid`.
pub fn delta_sweep(exp: &Experiment, base: &FreleConfig, grid: &[f64]) -> Result<SweepResult> {
    run_sweep(exp, base, SweepKind::Delta, grid)
}

/// Train + evaluate once per retention fraction in `retentions`.
pub fn pruning_sweep(exp: &Experiment, base: &FreleConfig, retentions: &[f64]) -> Result<SweepResult> {
    run_sweep(exp, base, SweepKind::Retention, retentions)
}

/// Inclusive arithmetic grid `start, start + step, ..., stop`, values rounded
/// to 12 decimals.
pub fn step_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::InvalidConfig("grid needs step > 0 and stop >= start".into()));
    }
    let n = libm::floor((stop - start) / step + 1e-9) as usize + 1;
    Ok((0..n)
        .map(|i| libm::round((start + i as f64 * step) * 1e12) / 1e12)
        .collect())
}

/// Loss variants compared in the ablation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AblationSetting {
    /// Explicit frequency loss with implicit peak rescaling.
    EfrIfr,
    /// Explicit frequency loss only.
    Efr,
    /// Explicit frequency loss with adaptive amplitude normalisation.
    EfrAn,
}

impl AblationSetting {
    pub const ALL: [AblationSetting; 3] =
        [AblationSetting::EfrIfr, AblationSetting::Efr, AblationSetting::EfrAn];

    pub fn label(&self) -> &'static str {
        match self {
            AblationSetting::EfrIfr => "EFR-IFR",
            AblationSetting::Efr => "EFR",
            AblationSetting::EfrAn => "EFR-AN",
        }
    }

    pub fn apply(&self, base: &FreleConfig) -> FreleConfig {
        let (implicit_enabled, an_enabled) = match self {
            AblationSetting::EfrIfr => (true, false),
            AblationSetting::Efr => (false, false),
            AblationSetting::EfrAn => (false, true),
        };
        FreleConfig {
            implicit_enabled,
            an_enabled,
            ..*base
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub setting: AblationSetting,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub seed: u64,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn get(&self, setting: AblationSetting) -> Option<&Metrics> {
        self.rows.iter().find(|r| r.setting == setting).map(|r| &r.metrics)
    }
}

/// Validates that an ablation makes sense for `base`.
pub fn check_ablation_base(base: &FreleConfig) -> Result<()> {
    if base.delta <= 0.0 {
        return Err(Error::InvalidConfig(
            "ablation needs delta > 0 so the frequency loss is active".into(),
        ));
    }
    Ok(())
}

/// One ablation setting trained with the experiment's own seed.
pub fn ablation_row(exp: &Experiment, base: &FreleConfig, setting: AblationSetting) -> Result<AblationRow> {
    check_ablation_base(base)?;
    let run = exp.run(&setting.apply(base), exp.train_cfg.seed)?;
    Ok(AblationRow {
        setting,
        metrics: run.metrics,
    })
}

/// EFR-IFR / EFR / EFR-AN on identical splits and seed.
pub fn ablation_matrix(exp: &Experiment, base: &FreleConfig) -> Result<AblationTable> {
    let rows = AblationSetting::ALL
        .iter()
        .map(|&s| ablation_row(exp, base, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationTable {
        seed: exp.train_cfg.seed,
        rows,
    })
}

/// Table-style row labels for band reports: LF, MF, HF, GF, MAE, MSE.
pub const BAND_REPORT_COLUMNS: [&str; 6] = ["LF", "MF", "HF", "GF", "MAE", "MSE"];

/// Formats a band report plus metrics in [`BAND_REPORT_COLUMNS`] order.
pub fn band_report_row(bands: &BandReport, metrics: &Metrics) -> [f64; 6] {
    [
        bands.lf_rmse,
        bands.mf_rmse,
        bands.hf_rmse,
        bands.gf_rmse,
        metrics.mae,
        metrics.mse,
    ]
}

/// Human-readable label for an ablation or sweep configuration.
pub fn describe(cfg: &FreleConfig) -> String {
    alloc::format!(
        "delta={} d={} eta={} implicit={} an={}",
        cfg.delta,
        cfg.width,
        cfg.eta.map_or(String::from("B"), |e| alloc::format!("{e}")),
        cfg.implicit_enabled,
        cfg.an_enabled
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_eleven_points() {
        let g = step_grid(0.0, 1.0, 0.1).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[10], 1.0);
        assert!(step_grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn non_bin_frequency_rejected() {
        let truth: Vec<f64> = (0..64).map(|i| libm::sin(i as f64)).collect();
        assert_eq!(
            TrajectoryProbe::new(&truth, &[2.5]).unwrap_err(),
            Error::NonIntegerFrequency(2.5)
        );
    }

    #[test]
    fn zero_output_has_unit_error() {
        let spec = SineSumSpec::default();
        let truth = gen_sine_sum(&spec).unwrap().channel(0).to_vec();
        let probe = TrajectoryProbe::new(&truth, &[8.0, 16.0, 24.0]).unwrap();
        assert_eq!(probe.errors(&vec![0.0; 512]).unwrap(), vec![1.0, 1.0, 1.0]);
        let e = probe.errors(&truth).unwrap();
        assert!(e.iter().all(|&v| v < 1e-12));
    }

    #[test]
    fn first_below_scans_in_order() {
        let mut t = FrequencyTrajectory {
            freqs: vec![1.0, 3.0],
            iterations: vec![],
            errors: vec![],
        };
        t.push(0, vec![1.0, 1.0]);
        t.push(10, vec![0.2, 0.9]);
        t.push(20, vec![0.1, 0.25]);
        assert_eq!(t.first_below(0, 0.3), Some(10));
        assert_eq!(t.first_below(1, 0.3), Some(20));
        assert_eq!(t.first_below(1, 0.1), None);
    }

    #[test]
    fn ablation_settings_toggle_flags() {
        let base = FreleConfig::default();
        assert!(AblationSetting::EfrIfr.apply(&base).implicit_enabled);
        let efr = AblationSetting::Efr.apply(&base);
        assert!(!efr.implicit_enabled && !efr.an_enabled);
        let an = AblationSetting::EfrAn.apply(&base);
        assert!(an.an_enabled && !an.implicit_enabled);
        assert!(check_ablation_base(&FreleConfig { delta: 0.0, ..base }).is_err());
    }
}
