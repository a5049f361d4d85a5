use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("element locator `{0}` does not resolve to an element")]
    Locator(String),

    #[error("corpus is empty, nothing to train on")]
    EmptyCorpus,

    #[error("duplicate document id {0}")]
    DuplicateDocId(usize),

    #[error("document ids must be dense 0..N-1 in order; found {found} at position {position}")]
    NonDenseDocId { position: usize, found: usize },

    #[error("term-document matrix has no non-zero entries")]
    DegenerateMatrix,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("similarity index is empty")]
    EmptyIndex,

    #[error("no databank entry for topic `{0}`")]
    NoDatabankEntry(String),

    #[error("databank pool for topic `{0}` is exhausted")]
    DatabankExhausted(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {required} samples, got {found}")]
    TooFewSamples { required: usize, found: usize },

    #[error("invalid model artifact: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.to_string(),
        }
    }
}
