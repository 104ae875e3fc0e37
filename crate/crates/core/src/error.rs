use thiserror::Error;

/// Errors produced by the library.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("item count {r} exceeds the cap of {cap}")]
    Capacity { r: usize, cap: usize },
    #[error("index {index} out of range for {r} items")]
    IndexOutOfRange { index: usize, r: usize },
    #[error("invalid ranking: {0}")]
    InvalidRanking(String),
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("observation {observation} has zero likelihood under the current parameters")]
    DegenerateLikelihood { observation: usize },
    #[error("cluster {cluster} received no posterior mass")]
    DegenerateCluster { cluster: usize },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
