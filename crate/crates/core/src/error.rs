use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A malformed algebra or instance.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// No congruence makes the algebra a semilattice of Mal'cev blocks.
    #[error("not an SMB algebra: {reason} (witness {witness:?})")]
    NotSmb { reason: String, witness: Vec<usize> },

    #[error("regularization failed: identity {identity} fails at {witness:?}")]
    RegularizationFailed { identity: String, witness: Vec<usize> },

    /// A structural requirement (least block, flat order, ...) is missing.
    #[error("structure error: {0}")]
    Structure(String),

    /// The instance is not in the state the operation expects.
    #[error("state error: {0}")]
    State(String),

    #[error("{what} exceeded cap of {cap}")]
    CapExceeded { what: String, cap: usize },

    #[error("not found: {0}")]
    NotFound(String),

    /// A runtime audit detected a broken invariant.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
