use thiserror::Error;

use crate::linalg::SolveReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported space: {0}")]
    UnsupportedSpace(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("solver failed to converge ({context}): {report}")]
    SolverFailure { context: String, report: SolveReport },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("problem of size {size} exceeds the dense cap of {cap}")]
    TooLarge { size: usize, cap: usize },

    #[error("invalid state: {0}")]
    StateInvalid(String),

    #[error("{}", config_message(.line, .key, .message))]
    Config {
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn config_message(line: &Option<usize>, key: &Option<String>, message: &str) -> String {
    match (line, key) {
        (Some(l), Some(k)) => format!("config error at line {l}, key `{k}`: {message}"),
        (Some(l), None) => format!("config error at line {l}: {message}"),
        (None, Some(k)) => format!("config error, key `{k}`: {message}"),
        (None, None) => format!("config error: {message}"),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(line: Option<usize>, key: Option<&str>, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            key: key.map(str::to_owned),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::InvalidArgument(_) | Error::UnsupportedSpace(_) | Error::TooLarge { .. }
        )
    }
}
