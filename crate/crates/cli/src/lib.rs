//! Command-line front end: presets, JSON configs, runs, and sweeps.

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;
pub mod sweep;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Engine(#[from] dtc_core::Error),
}
