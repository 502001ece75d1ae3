use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("box half-width {half_width} too small: need at least {required} so that the cutoff support fits")]
    BoxTooSmall { half_width: f64, required: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("polynomial degree {0} is not supported (maximum 32)")]
    UnsupportedDegree(usize),

    #[error("solver failure at k={k}, h={h}, p={p}: {reason}")]
    Solver { k: f64, h: f64, p: usize, reason: String },

    #[error("insufficient data: need at least {needed} runs, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("coefficient bounds violated: {0}")]
    BoundsViolated(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
