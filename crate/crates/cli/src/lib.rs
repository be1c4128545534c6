//! Experiment front end for `reinsure-core`: JSON configuration, the
//! `filter-demo`, `bounds`, `surplus` and `value-compare` commands, and
//! their CSV outputs.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Command};
pub use config::{Experiment, ExperimentConfig, Overrides};
pub use error::CliError;
