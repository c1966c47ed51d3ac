//! Error type shared by the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),
    #[error("matrix is numerically singular at elimination step {step} (column {column})")]
    SingularMatrix { step: usize, column: usize },
    #[error("matrix pattern differs from the analyzed pattern")]
    PatternMismatch,
    #[error("invalid mesh parameters: {0}")]
    InvalidMesh(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("subdomain {subdomain}: {source}")]
    Subdomain { subdomain: usize, source: Box<Error> },
    #[error("coarse problem: {0}")]
    Coarse(Box<Error>),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
