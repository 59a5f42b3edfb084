use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the retrieval pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Input data is well-formed but violates a contract (unknown ids, empty files, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A caller passed an out-of-range or inconsistent argument.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A persisted file could not be decoded.
    #[error("format error: {0}")]
    Format(String),

    /// Internal bookkeeping went wrong; indicates a bug or corrupted statistics.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 2 for bad input, 1 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Internal(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
