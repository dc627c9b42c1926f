use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A qubit index, width, or shape does not fit the object it is applied to.
    #[error("structural error: {0}")]
    Structural(String),

    /// A value is out of its allowed domain (non-finite angle, zero shots, ...).
    #[error("validation error: {0}")]
    Validation(String),

    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("numerical error: {message} (min eigenvalue estimate {min_eigenvalue:e})")]
    Numerical { message: String, min_eigenvalue: f64 },

    #[error("data error: {0}")]
    Data(String),

    #[error("{path}: {message}")]
    DataFile { path: PathBuf, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("service error: {0}")]
    Service(String),

    /// A work unit failed twice in a row.
    #[error("unit {unit} failed on backend `{backend}`: {message}")]
    UnitFailed { unit: String, backend: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Coarse category used by the CLI and the C ABI to pick exit/status codes.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Data(_) | Error::DataFile { .. } => ErrorCategory::Data,
            Error::Config(_) => ErrorCategory::Config,
            Error::Service(_) | Error::UnitFailed { .. } | Error::Io(_) => ErrorCategory::Service,
            Error::Numerical { .. } => ErrorCategory::Numerical,
            Error::Structural(_) | Error::Validation(_) | Error::Capacity(_) | Error::Json(_) => ErrorCategory::Invalid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Invalid,
    Numerical,
    Data,
    Config,
    Service,
}
