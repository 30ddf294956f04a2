//! Plot-ready CSV reports and the JSON run manifest.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use frele_core::diagnostics::{
    band_report_row, AblationTable, BiasProfile, FrequencyTrajectory, RunResult, SweepResult,
    BAND_REPORT_COLUMNS,
};
use frele_core::spectral::BandReport;
use frele_core::theory::DecaySample;
use frele_core::trainer::{EpochLog, Metrics};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data_io::fmt_f64;
use crate::error::{LabError, Result};

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

/// Writes a header and rows as CSV.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| LabError::csv(path, e))?;
    w.write_record(header).map_err(|e| LabError::csv(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| LabError::csv(path, e))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

fn floats(values: &[f64]) -> Vec<String> {
    values.iter().map(|&v| fmt_f64(v)).collect()
}

pub fn write_bias_profile(path: &Path, profile: &BiasProfile) -> Result<()> {
    let rows = profile.rows.iter().map(|r| {
        let b = &r.bands;
        let mut row = vec![r.epoch.to_string()];
        row.extend(floats(&[
            b.lf_rmse,
            b.mf_rmse,
            b.hf_rmse,
            b.gf_rmse,
            r.metrics.mse,
            r.metrics.mae,
        ]));
        row
    });
    write_csv(path, &["epoch", "lf", "mf", "hf", "gf", "mse", "mae"], rows)
}

/// Long format: one row per recorded iteration and frequency.
pub fn write_trajectory(path: &Path, traj: &FrequencyTrajectory) -> Result<()> {
    let rows = traj.iterations.iter().zip(&traj.errors).flat_map(|(it, errs)| {
        traj.freqs
            .iter()
            .zip(errs)
            .map(move |(f, e)| vec![it.to_string(), fmt_f64(*f), fmt_f64(*e)])
    });
    write_csv(path, &["iteration", "freq", "rel_error"], rows)
}

pub fn write_sweep(path: &Path, sweep: &SweepResult) -> Result<()> {
    let rows = sweep
        .records
        .iter()
        .map(|r| floats(&[r.grid_value, r.mse, r.mae, r.time_loss, r.freq_loss]));
    write_csv(path, &["grid_value", "mse", "mae", "time_loss", "freq_loss"], rows)
}

pub fn write_decay_curves(path: &Path, curve: &[DecaySample]) -> Result<()> {
    let rows = curve.iter().map(|p| floats(&[p.xi_norm, p.relu, p.tanh]));
    write_csv(path, &["xi_norm", "gamma_relu_sq", "gamma_tanh_sq"], rows)
}

pub fn write_band_report(path: &Path, bands: &BandReport) -> Result<()> {
    let row = floats(&[bands.lf_rmse, bands.mf_rmse, bands.hf_rmse, bands.gf_rmse]);
    write_csv(path, &["lf", "mf", "hf", "gf"], [row])
}

/// One labelled row per model: band RMSEs followed by MAE and MSE.
pub fn write_table_report(path: &Path, rows: &[(String, BandReport, Metrics)]) -> Result<()> {
    let mut header = vec!["model"];
    header.extend(BAND_REPORT_COLUMNS);
    let rows = rows.iter().map(|(label, bands, metrics)| {
        let mut row = vec![label.clone()];
        row.extend(floats(&band_report_row(bands, metrics)));
        row
    });
    write_csv(path, &header, rows)
}

pub fn write_ablation(path: &Path, tables: &[AblationTable]) -> Result<()> {
    let rows = tables.iter().flat_map(|t| {
        t.rows.iter().map(move |r| {
            vec![
                t.seed.to_string(),
                r.setting.label().to_string(),
                fmt_f64(r.metrics.mse),
                fmt_f64(r.metrics.mae),
            ]
        })
    });
    write_csv(path, &["seed", "setting", "mse", "mae"], rows)
}

/// Per-epoch losses. Wall times are left out so reruns compare equal.
pub fn write_epochs(path: &Path, logs: &[EpochLog]) -> Result<()> {
    let rows = logs.iter().map(|l| {
        let mut row = vec![l.epoch.to_string()];
        row.extend(floats(&[
            l.train.time_loss,
            l.train.freq_loss,
            l.train.combined,
            l.val.time_loss,
            l.val.freq_loss,
            l.val.combined,
        ]));
        row
    });
    let header = [
        "epoch",
        "train_time",
        "train_freq",
        "train_combined",
        "val_time",
        "val_freq",
        "val_combined",
    ];
    write_csv(path, &header, rows)
}

pub fn write_run_metrics(path: &Path, run: &RunResult) -> Result<()> {
    let mut row = vec![run.seed.to_string(), run.best_epoch.to_string()];
    row.extend(floats(&[
        run.metrics.mse,
        run.metrics.mae,
        run.test_loss.time_loss,
        run.test_loss.freq_loss,
        run.test_loss.combined,
    ]));
    let header = ["seed", "best_epoch", "mse", "mae", "time_loss", "freq_loss", "combined"];
    write_csv(path, &header, [row])
}

/// Record of one CLI invocation. The only artifact that carries timestamps
/// and wall-clock durations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub created: String,
    pub config: RunConfig,
    pub metrics: BTreeMap<String, f64>,
    pub wall_times: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, args: Vec<String>, seed: u64, config: RunConfig) -> Self {
        Manifest {
            tool: "frele".into(),
            version: VERSION.into(),
            command: command.into(),
            args,
            seed,
            created: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            config,
            metrics: BTreeMap::new(),
            wall_times: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| LabError::json(Path::new("manifest"), e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        let mut f = File::create(path).map_err(|e| LabError::io(path, e))?;
        f.write_all(text.as_bytes()).map_err(|e| LabError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| LabError::json(path, e))
    }
}
