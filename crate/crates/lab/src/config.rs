//! Run configuration: one JSON document covering every subcommand.

use std::path::{Path, PathBuf};

use frele_core::diagnostics::{step_grid, ModelSpec, SpectralBiasExperiment};
use frele_core::loss::FreleConfig;
use frele_core::models::LinearMode;
use frele_core::series::SplitSpec;
use frele_core::synthetic::SeasonalSpec;
use frele_core::theory::InitSampler;
use frele_core::trainer::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Settings of the `theory-curves` command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryConfig {
    pub sampler: InitSampler,
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        TheoryConfig {
            sampler: InitSampler::unit(),
            dim: 1,
            lo: 1e-2,
            hi: 1e3,
            points: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Values of delta for `sweep-delta`.
    pub grid: Vec<f64>,
    /// Retention fractions for `prune-sweep`.
    pub retentions: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            grid: step_grid(0.0, 1.0, 0.1).expect("valid grid"),
            retentions: vec![1.0, 0.9, 0.8, 0.7, 0.6, 0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// ETT-shaped CSV; the seasonal generator is used when absent.
    pub data: Option<PathBuf>,
    pub synthetic: SeasonalSpec,
    /// Chosen from the data file name when absent.
    pub split: Option<SplitSpec>,
    pub lookback: usize,
    pub horizon: usize,
    pub stride: usize,
    pub model: ModelSpec,
    pub loss: FreleConfig,
    pub train: TrainConfig,
    pub bias: SpectralBiasExperiment,
    pub theory: TheoryConfig,
    pub sweep: SweepConfig,
    pub ablation_seeds: usize,
    /// Adds a time-only row to the `diagnose` report.
    pub baseline: bool,
    pub jobs: usize,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            synthetic: SeasonalSpec::default(),
            split: None,
            lookback: 96,
            horizon: 96,
            stride: 1,
            model: ModelSpec::default(),
            loss: FreleConfig::default(),
            train: TrainConfig::default(),
            bias: SpectralBiasExperiment::default(),
            theory: TheoryConfig::default(),
            sweep: SweepConfig::default(),
            ablation_seeds: 1,
            baseline: false,
            jobs: 1,
            out: None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| LabError::json(path, e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// The split in effect: explicit, else the ETT preset matching the data
    /// file name, else 70/10/20.
    pub fn effective_split(&self) -> SplitSpec {
        if let Some(s) = self.split {
            return s;
        }
        let name = self
            .data
            .as_ref()
            .and_then(|p| p.file_name())
            .map(|n| n.to_string_lossy().to_ascii_lowercase())
            .unwrap_or_default();
        if name.starts_with("etth") {
            SplitSpec::ETT_HOURLY
        } else if name.starts_with("ettm") {
            SplitSpec::ETT_MINUTE
        } else {
            SplitSpec::Fractional {
                train: 0.7,
                val: 0.1,
                test: 0.2,
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        self.train.validate()?;
        self.effective_split().validate()?;
        if self.lookback == 0 || self.horizon == 0 || self.stride == 0 {
            return Err(invalid("lookback, horizon and stride must be positive"));
        }
        if let LinearMode::Decomposed { kernel } = self.model.mode {
            if kernel < 3 || kernel % 2 == 0 {
                return Err(invalid("moving-average kernel must be odd and at least 3"));
            }
        }
        if self.data.is_none() && self.synthetic.len < self.lookback + self.horizon {
            return Err(invalid("synthetic series is shorter than lookback + horizon"));
        }
        let bias = &self.bias;
        bias.signal.validate()?;
        bias.activation.validate()?;
        if bias.hidden == 0 || bias.iterations == 0 || bias.record_every == 0 {
            return Err(invalid("bias.hidden, bias.iterations and bias.record_every must be positive"));
        }
        if !(bias.lr >= 0.0 && bias.lr.is_finite()) {
            return Err(invalid("bias.lr must be finite and non-negative"));
        }
        let t = &self.theory;
        if t.sampler.samples == 0 || t.dim == 0 || t.points < 2 {
            return Err(invalid("theory needs samples >= 1, dim >= 1 and points >= 2"));
        }
        if !(t.lo > 0.0 && t.lo < t.hi && t.hi.is_finite()) {
            return Err(invalid("theory range needs 0 < lo < hi"));
        }
        let unit = |v: &f64| (0.0..=1.0).contains(v);
        if self.sweep.grid.is_empty() || !self.sweep.grid.iter().all(unit) {
            return Err(invalid("sweep.grid must be non-empty with values in [0, 1]"));
        }
        if self.sweep.retentions.is_empty() || !self.sweep.retentions.iter().all(unit) {
            return Err(invalid("sweep.retentions must be non-empty with values in [0, 1]"));
        }
        if self.ablation_seeds == 0 {
            return Err(invalid("ablation_seeds must be at least 1"));
        }
        if self.jobs == 0 {
            return Err(invalid("jobs must be at least 1"));
        }
        Ok(())
    }
}
