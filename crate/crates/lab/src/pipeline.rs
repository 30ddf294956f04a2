//! From a [`RunConfig`] to written reports: dataset loading, TimesNet-style
//! border windows, and the body of every subcommand.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use frele_core::diagnostics::{
    check_ablation_base, point_seed, spectral_bias_report, sweep_point, AblationRow,
    AblationSetting, AblationTable, BiasProfile, Experiment, RunResult, SweepKind, SweepResult,
};
use frele_core::loss::{FreleConfig, TimeLossKind};
use frele_core::series::{fit_apply_scaler, make_windows, MultiSeries, Scaler, WindowPair};
use frele_core::spectral::{bin_count, irfft, rdft_naive, rfft, BandPartition};
use frele_core::synthetic::gen_seasonal;
use frele_core::theory::decay_curves;
use frele_core::{rng, Error as CoreError};
use rand::Rng;
use rayon::prelude::*;

use crate::checkpoint::{Checkpoint, ModelState};
use crate::config::RunConfig;
use crate::data_io::load_csv;
use crate::error::{LabError, Result};
use crate::report;

/// First-crossing threshold of relative amplitude error.
pub const CROSSING_THRESHOLD: f64 = 0.3;

/// Metrics, timings and files produced by one command.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub metrics: BTreeMap<String, f64>,
    pub wall_times: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
}

impl Outcome {
    fn file(&mut self, dir: &Path, name: &str) -> std::path::PathBuf {
        self.outputs.push(name.to_string());
        dir.join(name)
    }
}

pub fn load_series(cfg: &RunConfig) -> Result<(MultiSeries, String)> {
    match &cfg.data {
        Some(path) => Ok((load_csv(path)?, path.display().to_string())),
        None => Ok((gen_seasonal(&cfg.synthetic)?, "synthetic:seasonal".into())),
    }
}

/// Train, validation and test windows of one series.
#[derive(Debug, Clone)]
pub struct Windows {
    pub train: Vec<WindowPair>,
    pub val: Vec<WindowPair>,
    pub test: Vec<WindowPair>,
    pub scaler: Scaler,
}

/// Cuts `series` into segments of the given lengths. Validation and test
/// segments start `lookback` steps early so their first forecast begins right
/// at the border. The scaler is fitted on the training segment only.
pub fn border_windows(
    series: &MultiSeries,
    lengths: (usize, usize, usize),
    lookback: usize,
    horizon: usize,
    stride: usize,
) -> Result<Windows> {
    let (n_train, n_val, n_test) = lengths;
    let end = n_train + n_val + n_test;
    if n_train < lookback || end > series.len() {
        return Err(CoreError::SeriesTooShort {
            len: n_train,
            needed: lookback + horizon,
        }
        .into());
    }
    let train = series.slice(0, n_train)?;
    let val = series.slice(n_train - lookback, n_train + n_val)?;
    let test = series.slice(n_train + n_val - lookback, end)?;
    let (train, rest, scaler) = fit_apply_scaler(&train, &[&val, &test])?;
    let w = |s: &MultiSeries| make_windows(s, lookback, horizon, stride);
    Ok(Windows {
        train: w(&train)?,
        val: w(&rest[0])?,
        test: w(&rest[1])?,
        scaler,
    })
}

pub fn experiment_from(cfg: &RunConfig, series: &MultiSeries) -> Result<Experiment> {
    let lengths = cfg.effective_split().lengths(series.len())?;
    let w = border_windows(series, lengths, cfg.lookback, cfg.horizon, cfg.stride)?;
    Ok(Experiment {
        model: cfg.model,
        train: w.train,
        val: w.val,
        test: w.test,
        train_cfg: cfg.train,
    })
}

pub fn prepare(cfg: &RunConfig) -> Result<(Experiment, String)> {
    let (series, source) = load_series(cfg)?;
    Ok((experiment_from(cfg, &series)?, source))
}

/// Maps `f` over `items` on `jobs` threads, keeping input order.
pub fn par_map<T, R, F>(jobs: usize, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    if jobs <= 1 {
        return items.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| LabError::Config(e.to_string()))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

fn seconds_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

fn run_metrics(out: &mut Outcome, run: &RunResult) {
    let m = &mut out.metrics;
    m.insert("mse".into(), run.metrics.mse);
    m.insert("mae".into(), run.metrics.mae);
    m.insert("test_time_loss".into(), run.test_loss.time_loss);
    m.insert("test_freq_loss".into(), run.test_loss.freq_loss);
    m.insert("test_combined".into(), run.test_loss.combined);
    m.insert("best_epoch".into(), run.best_epoch as f64);
    m.insert("epochs_run".into(), run.logs.len() as f64);
}

fn epoch_times(out: &mut Outcome, run: &RunResult) {
    if let Some(last) = run.logs.last() {
        out.wall_times.insert("training".into(), last.wall_time);
        out.wall_times
            .insert("mean_epoch".into(), last.wall_time / run.logs.len() as f64);
    }
}

/// Trains once and writes `metrics.csv`, `epochs.csv` and `model.json`.
pub fn train(cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    let start = Instant::now();
    let (exp, _) = prepare(cfg)?;
    let clock = move || seconds_since(start);
    let run = exp.run_with(&cfg.loss, cfg.train.seed, None, Some(&clock))?;
    let mut out = Outcome::default();
    report::write_run_metrics(&out.file(dir, "metrics.csv"), &run)?;
    report::write_epochs(&out.file(dir, "epochs.csv"), &run.logs)?;
    let ck = Checkpoint::new(ModelState::Linear(run.model.clone()), Some(cfg.clone()));
    ck.save(&out.file(dir, "model.json"))?;
    run_metrics(&mut out, &run);
    epoch_times(&mut out, &run);
    Ok(out)
}

fn model_label(cfg: &FreleConfig) -> String {
    if cfg.delta == 0.0 {
        "DLinear".into()
    } else {
        format!("DLinear+FreLE(delta={})", cfg.delta)
    }
}

/// Trains with per-epoch band tracking; writes the bias profile, the test
/// band report and a labelled table row per trained model.
pub fn diagnose(cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    let start = Instant::now();
    let (exp, _) = prepare(cfg)?;
    let partition = BandPartition::standard(bin_count(cfg.horizon))?;
    let clock = move || seconds_since(start);
    let run = exp.run_with(&cfg.loss, cfg.train.seed, Some(partition.clone()), Some(&clock))?;
    let profile = BiasProfile::from_logs(&run.logs)?;
    let bands = spectral_bias_report(&run.model, &exp.test, &partition)?;

    let mut out = Outcome::default();
    report::write_bias_profile(&out.file(dir, "bias_profile.csv"), &profile)?;
    report::write_band_report(&out.file(dir, "bands.csv"), &bands)?;
    let mut table = Vec::new();
    if cfg.baseline {
        let plain = FreleConfig::time_only(TimeLossKind::Mse);
        let base = exp.run(&plain, cfg.train.seed)?;
        let base_bands = spectral_bias_report(&base.model, &exp.test, &partition)?;
        out.metrics.insert("baseline_mse".into(), base.metrics.mse);
        out.metrics.insert("baseline_mae".into(), base.metrics.mae);
        table.push((model_label(&plain), base_bands, base.metrics));
    }
    table.push((model_label(&cfg.loss), bands, run.metrics));
    report::write_table_report(&out.file(dir, "report.csv"), &table)?;
    run_metrics(&mut out, &run);
    for (k, v) in [
        ("lf_rmse", bands.lf_rmse),
        ("mf_rmse", bands.mf_rmse),
        ("hf_rmse", bands.hf_rmse),
        ("gf_rmse", bands.gf_rmse),
    ] {
        out.metrics.insert(k.into(), v);
    }
    epoch_times(&mut out, &run);
    Ok(out)
}

/// Runs every grid point of a sweep, possibly in parallel.
pub fn sweep(exp: &Experiment, base: &FreleConfig, kind: SweepKind, grid: &[f64], jobs: usize) -> Result<SweepResult> {
    let points: Vec<(usize, f64)> = grid.iter().copied().enumerate().collect();
    let records = par_map(jobs, &points, |&(i, v)| Ok(sweep_point(exp, base, kind, i, v)?))?;
    Ok(SweepResult::from_records(kind, records)?)
}

fn sweep_command(cfg: &RunConfig, dir: &Path, kind: SweepKind, grid: &[f64]) -> Result<Outcome> {
    let start = Instant::now();
    let (exp, _) = prepare(cfg)?;
    let result = sweep(&exp, &cfg.loss, kind, grid, cfg.jobs)?;
    let mut out = Outcome::default();
    report::write_sweep(&out.file(dir, "sweep.csv"), &result)?;
    let best = result.best();
    out.metrics.insert("best_grid_value".into(), best.grid_value);
    out.metrics.insert("best_mse".into(), best.mse);
    out.metrics.insert("best_mae".into(), best.mae);
    out.wall_times.insert("total".into(), seconds_since(start));
    Ok(out)
}

pub fn sweep_delta(cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    sweep_command(cfg, dir, SweepKind::Delta, &cfg.sweep.grid)
}

pub fn prune_sweep(cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    sweep_command(cfg, dir, SweepKind::Retention, &cfg.sweep.retentions)
}

/// EFR-IFR / EFR / EFR-AN for `seeds` consecutive seeds.
pub fn ablation(exp: &Experiment, base: &FreleConfig, seeds: usize, jobs: usize) -> Result<Vec<AblationTable>> {
    check_ablation_base(base)?;
    let jobs_list: Vec<(u64, AblationSetting)> = (0..seeds)
        .flat_map(|i| {
            let seed = point_seed(exp.train_cfg.seed, i);
            AblationSetting::ALL.into_iter().map(move |s| (seed, s))
        })
        .collect();
    let rows = par_map(jobs, &jobs_list, |&(seed, setting)| {
        let run = exp.run(&setting.apply(base), seed)?;
        Ok(AblationRow {
            setting,
            metrics: run.metrics,
        })
    })?;
    Ok(jobs_list
        .chunks(AblationSetting::ALL.len())
        .zip(rows.chunks(AblationSetting::ALL.len()))
        .map(|(keys, rows)| AblationTable {
            seed: keys[0].0,
            rows: rows.to_vec(),
        })
        .collect())
}

pub fn ablate(cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    let start = Instant::now();
    let (exp, _) = prepare(cfg)?;
    let tables = ablation(&exp, &cfg.loss, cfg.ablation_seeds, cfg.jobs)?;
    let mut out = Outcome::default();
    report::write_ablation(&out.file(dir, "ablation.csv"), &tables)?;
    for setting in AblationSetting::ALL {
        let mse: Vec<f64> = tables.iter().filter_map(|t| t.get(setting)).map(|m| m.mse).collect();
        let mean = mse.iter().sum::<f64>() / mse.len() as f64;
        out.metrics.insert(format!("mean_mse_{}", setting.label()), mean);
    }
    out.wall_times.insert("total".into(), seconds_since(start));
    Ok(out)
}

/// Trains the two-layer network on the sine sum and writes the per-frequency
/// error trajectory, the loss curve and the final model.
pub fn synth_bias(cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    let start = Instant::now();
    let run = cfg.bias.run()?;
    let mut out = Outcome::default();
    report::write_trajectory(&out.file(dir, "trajectory.csv"), &run.trajectory)?;
    let losses = run.trajectory.iterations.iter().zip(&run.losses).map(|(it, l)| {
        vec![it.to_string(), crate::data_io::fmt_f64(*l)]
    });
    report::write_csv(&out.file(dir, "losses.csv"), &["iteration", "mse"], losses)?;
    Checkpoint::new(ModelState::Mlp(run.model.clone()), Some(cfg.clone()))
        .save(&out.file(dir, "model.json"))?;
    let traj = &run.trajectory;
    for (j, f) in traj.freqs.iter().enumerate() {
        if let Some(it) = traj.first_below(j, CROSSING_THRESHOLD) {
            out.metrics.insert(format!("first_below_bin_{f}"), it as f64);
        }
    }
    if let Some(&loss) = run.losses.last() {
        out.metrics.insert("final_mse".into(), loss);
    }
    out.wall_times.insert("total".into(), seconds_since(start));
    Ok(out)
}

pub fn theory_curves(cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    let start = Instant::now();
    let t = &cfg.theory;
    let curve = decay_curves(t.lo, t.hi, t.points, t.dim, &t.sampler)?;
    let mut out = Outcome::default();
    report::write_decay_curves(&out.file(dir, "decay_curves.csv"), &curve)?;
    out.wall_times.insert("total".into(), seconds_since(start));
    Ok(out)
}

/// Worst errors of the fast transform against the direct sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FftCheck {
    pub trials: usize,
    pub max_bin_error: f64,
    pub max_roundtrip_error: f64,
    pub max_parseval_rel: f64,
}

impl FftCheck {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn passed(&self) -> bool {
        self.max_bin_error < Self::TOLERANCE
            && self.max_roundtrip_error < Self::TOLERANCE
            && self.max_parseval_rel < Self::TOLERANCE
    }
}

/// Compares `rfft` with the direct DFT on `trials` random inputs with
/// lengths uniform in `1..=max_len` and entries uniform in `[-1, 1]`.
pub fn fft_check(trials: usize, max_len: usize, seed: u64) -> Result<FftCheck> {
    if trials == 0 || max_len == 0 {
        return Err(LabError::Config("fft-check needs trials >= 1 and max_len >= 1".into()));
    }
    let mut rng = rng::seeded(seed);
    let mut report = FftCheck {
        trials,
        max_bin_error: 0.0,
        max_roundtrip_error: 0.0,
        max_parseval_rel: 0.0,
    };
    for _ in 0..trials {
        let n = rng.random_range(1..=max_len);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let fast = rfft(&x)?;
        let slow = rdft_naive(&x)?;
        for (a, b) in fast.bins().iter().zip(slow.bins()) {
            report.max_bin_error = report.max_bin_error.max((a - b).norm());
        }
        let back = irfft(&fast)?;
        for (a, b) in back.iter().zip(&x) {
            report.max_roundtrip_error = report.max_roundtrip_error.max((a - b).abs());
        }
        let energy: f64 = x.iter().map(|v| v * v).sum();
        let spectral: f64 = fast
            .bins()
            .iter()
            .enumerate()
            .map(|(k, z)| {
                let twice = k != 0 && !(n % 2 == 0 && k == n / 2);
                z.norm_sqr() * if twice { 2.0 } else { 1.0 }
            })
            .sum::<f64>()
            / n as f64;
        if energy > 0.0 {
            let rel = (energy - spectral).abs() / energy;
            report.max_parseval_rel = report.max_parseval_rel.max(rel);
        }
    }
    Ok(report)
}
