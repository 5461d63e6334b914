use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the feature pipeline.
#[derive(Debug, Error)]
pub enum RapidError {
    #[error("malformed scan: {len} bytes is not a multiple of 16")]
    MalformedScan { len: u64 },

    #[error("non-finite value at point {index}")]
    NonFinite { index: usize },

    #[error("label count {found} does not match point count {expected}")]
    LabelMismatch { expected: usize, found: usize },

    #[error("scene has no primitives")]
    EmptyScene,

    #[error("format error: {0}")]
    Format(String),

    #[error("insufficient points: need at least {needed}, found {found}")]
    InsufficientPoints { needed: usize, found: usize },

    #[error("angle undefined for zero-norm point")]
    UndefinedAngle,

    #[error("semantic labels are required")]
    LabelsRequired,

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RapidError {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        RapidError::Contract(msg.into())
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RapidError::File {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = RapidError> = std::result::Result<T, E>;
