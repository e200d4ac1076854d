use std::io;

use kawasaki_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("could not read {path}: {source}")]
    Read { path: String, source: io::Error },
    #[error("could not write output: {0}")]
    Write(#[from] io::Error),
    #[error("{0}")]
    Core(#[from] CoreError),
    /// A check ran and failed; artifacts were written.
    #[error("{0}")]
    CheckFailed(String),
    #[error("refused: {0}")]
    Refused(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Read { .. } | CliError::Write(_) | CliError::Refused(_) => 1,
            CliError::CheckFailed(_) => 2,
            CliError::Core(e) => match e {
                CoreError::LadderAnomaly { .. } => 3,
                CoreError::Overflow { .. } => 2,
                _ => 1,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
