use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("component index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("enumeration too large: n = {n} exceeds the cap of {cap}")]
    EnumerationTooLarge { n: usize, cap: usize },

    #[error("non-finite objective value {value} at stage {stage}, iteration {iter}")]
    NonFinite {
        value: f64,
        stage: usize,
        iter: usize,
    },

    #[error("trace records out of order: component_calls {got} after {previous}")]
    TraceOrder { previous: u64, got: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
