use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid instance file: {0}")]
    InvalidInstance(String),

    #[error("invalid Pareto set file: {0}")]
    InvalidPosFile(String),

    #[error("Pareto set does not belong to this landscape: {0}")]
    PosMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Runtime(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from user input rather than from execution.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::InvalidInstance(_)
                | Error::InvalidPosFile(_)
                | Error::PosMismatch(_)
                | Error::Config(_)
                | Error::Json(_)
        )
    }
}
