//! Experiment runner: configuration, subcommands and report tables.

pub mod commands;
pub mod config;
pub mod error;
pub mod run;
pub mod score;
pub mod table;

pub use config::{ExperimentConfig, ModelSettings, Precision, SEED_ENV};
pub use error::{CliError, CliResult, ErrorKind};
