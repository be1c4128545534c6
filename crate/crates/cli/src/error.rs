use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Everything a command can fail with. The variant decides the process
/// exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Model(#[from] reinsure_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { path: path.into(), message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 for configuration problems, 3 for numerical domain errors, 1 for
    /// IO failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Model(e) if e.is_validation() => 2,
            CliError::Model(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}
