use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = MilError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MilError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("model kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: &'static str, found: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<MilError>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl MilError {
    /// Wraps the error with a location such as `run 2, fold 7`.
    pub fn context(self, context: impl Into<String>) -> Self {
        MilError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MilError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        MilError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
