use thiserror::Error;

/// Crate-wide error type. The CLI maps the variants onto exit codes, so new
/// failure modes should pick the variant that matches their cause.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{what} size {size} exceeds cap {cap}")]
    ResourceCap {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("formula is unsatisfiable")]
    Unsatisfiable,

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
