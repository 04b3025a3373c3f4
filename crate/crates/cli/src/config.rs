//! Experiment configuration: one JSON file fully determines a run.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dbranch::process::{Estimator, TailStatistic};
use dbranch::{EnvironmentSpec, OffspringLaw2};

/// Declarative description of one experiment. Unknown keys are rejected;
/// horizons must be strictly increasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub env: EnvironmentSpec,
    pub type2: OffspringLaw2,
    pub horizons: Vec<usize>,
    pub replicates: u64,
    pub estimator: Estimator,
    pub master_seed: u64,
    /// 0 lets the runtime pick the worker count.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub tail: Option<TailConfig>,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    pub statistic: TailStatistic,
    /// Per-replicate cap on the type-1 lifetime, with censoring
    /// diagnostics; subcritical lifetimes are exponentially short while
    /// critical ones have polynomial tails, so the cap is configurable.
    #[serde(default = "default_t_cap")]
    pub t_cap: usize,
}

fn default_t_cap() -> usize {
    1_000_000
}

fn default_out_dir() -> String {
    "out".into()
}

/// Config errors carry the JSON path of the offending field where known.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| ConfigError(format!("{}: {}", e.path(), e.inner())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.horizons.is_empty() {
            return Err(ConfigError("horizons: must not be empty".into()));
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError("horizons: must be strictly increasing".into()));
        }
        if self.replicates == 0 {
            return Err(ConfigError("replicates: must be positive".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Content hash over the canonical (compact) serialization.
    pub fn hash(&self) -> String {
        let compact = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(compact.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Metadata record written next to every output. Re-running the same config
/// and seed reproduces the manifest except for `wall_ms`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config_name: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub workers: usize,
    pub wall_ms: u64,
    pub replicates: u64,
    pub censored: u64,
    pub failed: u64,
    pub results: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_name: cfg.name.clone(),
            config_hash: cfg.hash(),
            master_seed: cfg.master_seed,
            workers: cfg.workers,
            wall_ms: 0,
            replicates: cfg.replicates,
            censored: 0,
            failed: 0,
            results: serde_json::Value::Null,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}
