use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("cannot read dataset {path}: {message}")]
    Dataset { path: PathBuf, message: String },

    #[error("run aborted: {0}")]
    InnerFailure(String),

    #[error("CSV schema error: missing column `{0}`")]
    MissingColumn(String),

    #[error("CSV row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("reference cache entry {path} is corrupt: {message}")]
    Cache { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] spgm::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BenchError {
    /// Process exit status: 2 for an unreadable dataset, 3 for a run aborted
    /// on an inner-solver failure, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Dataset { .. } => 2,
            BenchError::InnerFailure(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
