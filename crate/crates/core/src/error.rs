use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum ZskError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    #[error("CSV error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("schema mismatch in {path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("unknown target id `{0}` (absent from the side-information table)")]
    UnknownTarget(String),

    #[error("duplicate target id `{0}`")]
    DuplicateTarget(String),

    #[error("non-numeric cell `{value}` at row {row}, column `{column}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        actual: usize,
    },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("regressor has not been fitted")]
    NotFitted,

    #[error("operation requires a linear kernel, model uses {0}")]
    NotLinear(String),

    #[error("cannot split: {0}")]
    Split(String),

    #[error("relative MSE undefined: zero denominator")]
    UndefinedScore,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("model container version {found} is not supported (expected {expected})")]
    ModelVersion { found: u32, expected: u32 },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl ZskError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ZskError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn dims(what: impl Into<String>, expected: usize, actual: usize) -> Self {
        ZskError::DimensionMismatch {
            what: what.into(),
            expected,
            actual,
        }
    }

    /// Process exit code for this error: 1 config/validation, 2 data/dimension, 3 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            ZskError::Config(_)
            | ZskError::InvalidArgument(_)
            | ZskError::Unsupported(_)
            | ZskError::Json(_) => 1,
            ZskError::MissingFile(_)
            | ZskError::Csv { .. }
            | ZskError::Schema { .. }
            | ZskError::UnknownTarget(_)
            | ZskError::DuplicateTarget(_)
            | ZskError::NonNumeric { .. }
            | ZskError::NonFinite(_)
            | ZskError::DimensionMismatch { .. }
            | ZskError::Empty(_)
            | ZskError::ModelVersion { .. }
            | ZskError::Split(_) => 2,
            ZskError::Io { .. }
            | ZskError::Degenerate(_)
            | ZskError::NotFitted
            | ZskError::NotLinear(_)
            | ZskError::UndefinedScore => 3,
        }
    }
}

pub type Result<T, E = ZskError> = std::result::Result<T, E>;
