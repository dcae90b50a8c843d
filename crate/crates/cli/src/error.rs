//! CLI error type with stable exit codes: 2 for configuration, input, and
//! parse problems; 1 for failures inside a computation.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not readable: file does not exist")]
    MissingInput { path: PathBuf },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("bad config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("incompatible checkpoint: {message}")]
    IncompatibleCheckpoint { message: String },
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute(_) => 1,
            _ => 2,
        }
    }

    pub fn compute(err: impl std::fmt::Display) -> Self {
        CliError::Compute(err.to_string())
    }
}
