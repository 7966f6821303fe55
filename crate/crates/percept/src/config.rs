//! Run configuration: one TOML file with a section per component. Every field
//! has a default, so an empty file is valid.

use std::path::{Path, PathBuf};

use percept_core::eval::EvalConfig;
use percept_core::filter::FilterConfig;
use percept_core::grpo::TrainConfig;
use percept_core::world::GenerationSpec;
use percept_core::SensorConfig;
use serde::{Deserialize, Serialize};

use crate::gateway::GatewayConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSection {
    /// Parent of per-command run directories.
    pub out_dir: PathBuf,
    /// Worker threads; unset means one per logical CPU.
    pub workers: Option<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { out_dir: PathBuf::from("runs"), workers: None }
    }
}

/// Which gateway role serves each component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoleNames {
    pub reasoner: String,
    pub sensor: String,
    pub direct: String,
    pub judge: String,
    pub solvers: Vec<String>,
    pub canonicalizer: Option<String>,
}

impl Default for RoleNames {
    fn default() -> Self {
        Self {
            reasoner: "reasoner".into(),
            sensor: "sensor".into(),
            direct: "direct".into(),
            judge: "judge".into(),
            solvers: Vec::new(),
            canonicalizer: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingSection {
    pub reasoner_max_tokens: Option<u32>,
    pub direct_temperature: f64,
    pub direct_max_tokens: Option<u32>,
    pub judge_temperature: f64,
    pub solver_temperature: f64,
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self {
            reasoner_max_tokens: Some(1024),
            direct_temperature: 1.0,
            direct_max_tokens: Some(1024),
            judge_temperature: 1.0,
            solver_temperature: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub run: RunSection,
    pub gateway: GatewayConfig,
    pub roles: RoleNames,
    pub sampling: SamplingSection,
    pub sensor: SensorConfig,
    pub eval: EvalConfig,
    pub train: TrainConfig,
    pub generation: GenerationSpec,
    pub filter: FilterConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {source}", .path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {}: {source}", .path.display())]
    Parse { path: PathBuf, source: toml::de::Error },
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })
    }
}
