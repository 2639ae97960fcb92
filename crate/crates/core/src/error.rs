use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CsixError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CsixError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed tabular input. `row` is the 1-based data row (header excluded).
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("model format: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CsixError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CsixError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 for usage/config/input problems,
    /// 3 for runtime and numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CsixError::Config(_)
            | CsixError::Json(_)
            | CsixError::Row { .. }
            | CsixError::Format(_)
            | CsixError::InvalidInput(_)
            | CsixError::Csv(_)
            | CsixError::IndexOutOfRange { .. } => 2,
            CsixError::Io { .. } | CsixError::DimensionMismatch { .. } | CsixError::Numeric(_) => 3,
        }
    }
}
