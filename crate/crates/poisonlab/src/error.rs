use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Structural misuse: out-of-range indices, shape mismatches, invalid gate targets.
    #[error("structural error: {0}")]
    Structural(String),

    /// Amplitude-encoding failures (non-power-of-two length, zero vector).
    #[error("encoding error: {0}")]
    Encoding(String),

    /// Caller misuse: bad CLI arguments, empty batches, alpha out of range.
    #[error("usage error: {0}")]
    Usage(String),

    /// Numerical failures: diverged training, non-convergent diagonalization.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Dataset ingestion failures, naming the offending file and offset.
    #[error("ingestion error in {file} at offset {offset}: {reason}")]
    Ingestion {
        file: String,
        offset: u64,
        reason: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }
    pub fn encoding(msg: impl Into<String>) -> Self {
        Error::Encoding(msg.into())
    }
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
