use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("field vanishes identically")]
    ZeroField,

    #[error("support violation: {0}")]
    Support(String),

    #[error("bracketing failed: {0}")]
    Bracketing(String),

    #[error("no sign change found; sampled values: {0}")]
    NoSignChange(String),

    #[error("search failed: {0}")]
    SearchFailed(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
