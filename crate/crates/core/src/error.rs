use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    /// A relative tolerance collapsed to zero because the initial residual vanished.
    #[error("relative tolerance for {0} is zero (initial value vanishes)")]
    ZeroTolerance(&'static str),

    #[error("{0} is not applicable to this problem")]
    NotApplicable(String),

    #[error("line search could not bracket a minimizer after {0} doublings")]
    BracketFailed(usize),

    #[error("no applicable term in iteration bound")]
    NoBoundTerms,

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
