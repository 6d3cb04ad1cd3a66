//! Driver for `fkam`: configuration, subcommands and artifact files.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;

pub use config::{parse_config, ExperimentConfig};
pub use error::CliError;
