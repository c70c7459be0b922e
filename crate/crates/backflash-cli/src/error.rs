//! CLI errors mapped onto process exit codes.

use backflash_core::engine::EngineError;
use std::path::Path;
use thiserror::Error;

/// Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 internal
/// invariant violation.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    /// csv and other wrapped I/O error types.
    pub fn io_other(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl From<crate::config::ConfigError> for CliError {
    fn from(err: crate::config::ConfigError) -> Self {
        CliError::Config(err.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(err: EngineError) -> Self {
        match err {
            EngineError::InvalidConfig { .. } | EngineError::MissingEve => {
                CliError::Config(err.to_string())
            }
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<backflash_core::analysis::AnalysisError> for CliError {
    fn from(err: backflash_core::analysis::AnalysisError) -> Self {
        CliError::Internal(err.to_string())
    }
}

impl From<backflash_core::eavesdropper::EveError> for CliError {
    fn from(err: backflash_core::eavesdropper::EveError) -> Self {
        CliError::Internal(err.to_string())
    }
}
