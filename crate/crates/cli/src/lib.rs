//! Configuration, experiment runners and output writers behind the `zakdd` binary.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{demo, Experiment, ExperimentConfig};
pub use error::CliError;

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    ExperimentConfig::parse(&text)
}

/// Validates, runs and writes one experiment; returns the files written.
pub fn run_config(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    let report = experiments::run(cfg)?;
    output::write_report(cfg, &report)
}
