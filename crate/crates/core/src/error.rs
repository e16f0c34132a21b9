use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside its legal domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The correlation structure does not describe a valid joint Gaussian model.
    #[error("invalid correlation model: {0}")]
    ModelValidity(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// An operation's precondition on the eigen-spectrum does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The closed form cannot be evaluated reliably; the Monte Carlo estimate
    /// should be used instead.
    #[error("degenerate eigen-spectrum ({0}); fall back to the Monte Carlo estimate")]
    Degenerate(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
