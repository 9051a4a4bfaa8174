use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the cost model, optimizer and simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("delay total is zero while a component is positive")]
    ZeroTotal,
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("decision dimension {0} exceeds the brute-force limit of 6")]
    DimensionTooLarge(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Scenario loading and validation errors.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
}

/// Top-level error for CLI-facing operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
