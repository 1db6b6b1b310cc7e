use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or precondition violation, named after the offending field.
    #[error("{field}: {message}")]
    Config { field: String, message: String },

    /// A numerical check (norm drift, oracle agreement, eigenvalue pairing) failed.
    #[error("numerical tolerance exceeded: {0}")]
    Tolerance(String),

    /// An internal invariant that should hold by construction was violated.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Tolerance(_) => 3,
            Error::Internal(_) | Error::Io { .. } => 1,
        }
    }

    /// Field name for machine-readable error reports, when there is one.
    pub fn field(&self) -> Option<&str> {
        match self {
            Error::Config { field, .. } => Some(field),
            _ => None,
        }
    }
}
