use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by a set containing zero")]
    DivisorZero,

    #[error("dilation by zero")]
    DegenerateDilation,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit: {what} needs {needed}, cap is {cap}")]
    ResourceLimit { what: &'static str, needed: u128, cap: u128 },

    #[error("configuration error: {0}")]
    Config(String),

    /// A D-witness failed one of its defining constraints; the message names it.
    #[error("invalid witness: {0}")]
    InvalidWitness(String),

    #[error("line {line}: {message}")]
    Input { line: usize, message: String },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }
}
