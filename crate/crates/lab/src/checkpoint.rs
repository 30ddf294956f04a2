//! Versioned JSON checkpoints of trained models.

use std::path::Path;

use frele_core::models::{Forecaster, LinearForecaster, Mlp};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{LabError, Result};

pub const FORMAT: &str = "frele-checkpoint";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "snake_case")]
pub enum ModelState {
    Linear(LinearForecaster),
    Mlp(Mlp),
}

impl ModelState {
    /// Rebuilds the model through its checked constructor.
    fn revalidate(self) -> Result<Self> {
        Ok(match self {
            ModelState::Linear(m) => ModelState::Linear(LinearForecaster::from_params(
                m.mode(),
                m.lookback(),
                m.horizon(),
                m.channels(),
                m.channel_shared(),
                m.params().to_vec(),
            )?),
            ModelState::Mlp(m) => ModelState::Mlp(Mlp::from_params(
                m.inputs(),
                m.hidden(),
                m.outputs(),
                m.activation(),
                m.params().to_vec(),
            )?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: Option<RunConfig>,
    pub model: ModelState,
}

impl Checkpoint {
    pub fn new(model: ModelState, config: Option<RunConfig>) -> Self {
        Checkpoint {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            config,
            model,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| LabError::json(path, e))?;
        std::fs::write(path, text).map_err(|e| LabError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| LabError::json(path, e))?;
        if ck.format != FORMAT || ck.version != FORMAT_VERSION {
            return Err(LabError::Config(format!(
                "{}: unsupported checkpoint {} version {}",
                path.display(),
                ck.format,
                ck.version
            )));
        }
        Ok(Checkpoint {
            model: ck.model.revalidate()?,
            ..ck
        })
    }
}
