use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("sample {sample}: {message}")]
    Invalid { sample: String, message: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {what} has {found} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("kernel matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("unknown view {0:?}")]
    UnknownView(String),

    #[error("missing view {view:?} in sample {sample}")]
    MissingView { sample: String, view: String },

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("trace for view {view:?} does not partition the embedding at feature {feature}")]
    TracePartition { view: String, feature: usize },

    #[error("malformed vocabulary label {label:?}: {message}")]
    Label { label: String, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(sample: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            sample: sample.into(),
            message: message.into(),
        }
    }
}
