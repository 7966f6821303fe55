use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use percept_core::prompts::PROMPT_VERSION;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::io::{write_json, IoError};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to rerun a command: its arguments, the resolved
/// configuration, seeds and the artifacts it wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: Config,
    pub seeds: BTreeMap<String, u64>,
    pub artifacts: Vec<PathBuf>,
    pub prompt_version: String,
    pub tool_version: String,
    pub started_unix_secs: u64,
    pub elapsed_secs: f64,
}

/// Collects manifest fields while a command runs.
pub struct ManifestBuilder {
    manifest: RunManifest,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, argv: Vec<String>, config: &Config) -> Self {
        let started_unix_secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self {
            manifest: RunManifest {
                command: command.to_string(),
                argv,
                config: config.clone(),
                seeds: BTreeMap::new(),
                artifacts: Vec::new(),
                prompt_version: PROMPT_VERSION.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                started_unix_secs,
                elapsed_secs: 0.0,
            },
            started: Instant::now(),
        }
    }

    pub fn seed(&mut self, name: &str, value: u64) -> &mut Self {
        self.manifest.seeds.insert(name.to_string(), value);
        self
    }

    pub fn artifact(&mut self, path: &Path) -> &mut Self {
        self.manifest.artifacts.push(path.to_path_buf());
        self
    }

    /// Writes `manifest.json` into `dir` and returns its path.
    pub fn finish(mut self, dir: &Path) -> Result<PathBuf, IoError> {
        self.manifest.elapsed_secs = self.started.elapsed().as_secs_f64();
        let path = dir.join(MANIFEST_FILE);
        write_json(&path, &self.manifest)?;
        Ok(path)
    }
}
