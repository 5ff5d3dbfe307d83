use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] latangle_core::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),
    #[error("config write error: {0}")]
    ConfigWrite(#[from] toml::ser::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 0 success, 2 usage, 3 infeasible-scale refusal, 4 numerical precision, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::ConfigParse(_) => 2,
            CliError::Refused(_) => 3,
            CliError::Core(e) if e.is_infeasible() => 3,
            CliError::Core(e) if e.is_precision() => 4,
            CliError::Core(latangle_core::Error::InvalidRadius(_))
            | CliError::Core(latangle_core::Error::NotPrime(_))
            | CliError::Core(latangle_core::Error::NotSplit(_)) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
