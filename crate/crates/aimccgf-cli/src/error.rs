//! Failure kinds of the command-line pipeline and their exit codes.

use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration could not be read, parsed or validated.
    #[error("config error: {0}")]
    Config(String),
    /// A `validate` run exceeded its threshold.
    #[error("validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Library(#[from] aimccgf::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serialize(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Library(aimccgf::Error::Convergence { .. }) => 4,
            _ => 1,
        })
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Serialize(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Serialize(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
