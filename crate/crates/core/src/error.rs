use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty collection: {0}")]
    EmptyCollection(String),

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("empty document{0}")]
    EmptyDocument(String),

    #[error("word index {index} out of range for vocabulary of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("non-finite parameter in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}, document `{doc_id}` (loss {loss})")]
    Diverged {
        epoch: usize,
        doc_id: String,
        loss: f64,
    },

    #[error("duplicate task id `{0}` in knowledge base")]
    DuplicateTask(String),

    #[error("unsupported format: {0}")]
    Format(String),

    #[error("truncated file {0}")]
    Truncated(PathBuf),

    #[error("{0}")]
    Invalid(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed input or configuration rather than
    /// a failure while computing.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Config(_)
                | Error::Format(_)
                | Error::Truncated(_)
                | Error::DuplicateId(_)
                | Error::IndexOutOfRange { .. }
                | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
