use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Schema { path: String, line: usize, message: String },

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("missing index at {0}")]
    MissingIndex(PathBuf),

    #[error("index already exists at {0} (pass --force to overwrite)")]
    IndexExists(PathBuf),

    #[error("{file}: format version mismatch (expected {expected}, found {found})")]
    VersionMismatch { file: String, expected: u32, found: u32 },

    #[error("{file}: corrupt index file: {reason}")]
    Corrupt { file: String, reason: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("scorer has no entry for prefix {0:?}")]
    MissingPrefix(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by caller-supplied data (as opposed to
    /// failures of the environment such as I/O).
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}
