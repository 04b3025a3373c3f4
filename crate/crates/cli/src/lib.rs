//! Library half of the `dbranch` experiment runner: declarative configs,
//! deterministic runners behind each subcommand, CSV/JSON/SVG emission and
//! the verification suite.

pub mod config;
pub mod csvio;
pub mod runner;
pub mod specs;
pub mod svg;
pub mod verify;

pub use config::{ConfigError, ExperimentConfig, RunManifest, TailConfig};
