use thiserror::Error;

/// Crate-wide error type.  Variants are chosen to map cleanly onto the CLI
/// exit codes: invalid input / parse / dimension problems are user errors,
/// `CapExceeded` marks a refused desk-scale budget, `Numerical` marks a
/// randomized numerical procedure that failed to converge.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An enumeration or memory budget would be exceeded.  The operation is
    /// refused rather than attempted.
    #[error("resource cap exceeded: {0}")]
    CapExceeded(String),

    #[error("numerical degeneracy: {0}")]
    Numerical(String),

    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn cap(msg: impl Into<String>) -> Self {
        Error::CapExceeded(msg.into())
    }
}
