use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown movement code {0}")]
    UnknownMovementCode(i64),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("incompatible annotations: {0}")]
    IncompatibleAnnotations(String),

    #[error("agreement is undefined for empty annotations")]
    UndefinedAgreement,

    #[error("frame dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("frame has a zero dimension")]
    ZeroDimension,

    #[error("non-monotone timestamp: {current} does not follow {previous}")]
    NonMonotoneTime { previous: f64, current: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("failed to load classifier: {0}")]
    ClassifierLoad(String),

    #[error("replay frame index {index} out of range for {frame_count} frames")]
    ReplayIndexOutOfRange { index: usize, frame_count: usize },

    #[error("length mismatch: {predictions} predictions vs {truth} ground-truth labels")]
    LengthMismatch { predictions: usize, truth: usize },

    #[error("source error: {0}")]
    Source(String),

    #[error("i/o error on {path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause: source,
        }
    }
}
