use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("covering failed to produce a matching condition after {attempts} attempts")]
    CoverFailed { attempts: usize },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("dataset has no image shape; cannot export images")]
    MissingImageShape,

    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },

    #[error("not enough points: {0}")]
    Integration(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Data {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit status for this error: 2 for data problems, 3 for
    /// training problems, 1 for everything caused by the invocation itself.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Data { .. } | Error::MissingImageShape => 2,
            Error::Checkpoint { .. } => 2,
            Error::CoverFailed { .. } | Error::Invariant(_) | Error::Dimension { .. } => 3,
            Error::Integration(_) => 3,
            Error::Config { .. } | Error::InvalidConfig(_) => 1,
            Error::Io { .. } => 2,
        }
    }
}
