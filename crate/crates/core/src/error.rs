use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("kill without cover at test {test}, mutant {mutant}")]
    KillWithoutCover { test: usize, mutant: usize },

    #[error("probability {value} out of range [0, 1] ({context})")]
    Probability { value: f64, context: String },

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("flakiness scope references unknown test `{0}`")]
    UnknownTest(String),

    #[error("flakiness scope references unknown group `{0}`")]
    UnknownGroup(String),

    #[error("invalid patch `{id}`: {reason}")]
    Patch { id: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed XML: {0}")]
    Xml(String),

    #[error("malformed CSV at line {line}: {reason}")]
    Csv { line: u64, reason: String },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

/// Failure class, mapped one-to-one onto process exit codes by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Parse,
    Invariant,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Parse => 2,
            ErrorKind::Invariant => 3,
            ErrorKind::Io => 4,
        }
    }
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Xml(_) | Error::Csv { .. } | Error::Json(_) => ErrorKind::Parse,
            Error::Io { .. } => ErrorKind::Io,
            _ => ErrorKind::Invariant,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
