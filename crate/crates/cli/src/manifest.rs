//! Run manifest: config echo, per-stage status and timing, worker count, output hashes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub converged: bool,
    pub wall_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
}

impl StageRecord {
    pub fn new(name: &str) -> Self {
        Self { name: name.into(), converged: false, wall_seconds: 0.0, failure: None, warnings: Vec::new(), metrics: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerInfo {
    pub count: usize,
    /// `env`, `config` or `default`.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub workers: WorkerInfo,
    /// Latest record per stage name.
    pub stages: BTreeMap<String, StageRecord>,
    /// Output file name (relative to the output directory) to lowercase hex SHA-256.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunManifest {
    /// Starts a manifest, carrying over stages and files from an earlier run in `dir`
    /// that still match on disk.
    pub fn open(dir: &Path, config: &ExperimentConfig, workers: WorkerInfo) -> Result<Self, CliError> {
        let mut m = Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            workers,
            stages: BTreeMap::new(),
            files: BTreeMap::new(),
        };
        if let Ok(text) = std::fs::read_to_string(dir.join(MANIFEST_FILE)) {
            if let Ok(old) = serde_json::from_str::<RunManifest>(&text) {
                m.stages = old.stages;
                for (name, hash) in old.files {
                    if sha256_file(&dir.join(&name)).ok().as_deref() == Some(hash.as_str()) {
                        m.files.insert(name, hash);
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn record_file(&mut self, dir: &Path, name: &str) -> Result<(), CliError> {
        let hash = sha256_file(&dir.join(name))?;
        self.files.insert(name.to_string(), hash);
        Ok(())
    }

    pub fn record_stage(&mut self, stage: StageRecord) {
        self.stages.insert(stage.name.clone(), stage);
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Manifest(e.to_string()))?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }

    /// Names of listed files that are missing or whose content no longer matches.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|(name, hash)| sha256_file(&dir.join(name)).ok().as_deref() != Some(hash.as_str()))
            .map(|(name, _)| name.clone())
            .collect()
    }
}
