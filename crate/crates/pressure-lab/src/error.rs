use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input outside the operation's domain (bad symbol, bad weights, invalid parameters).
    #[error("domain error: {0}")]
    Domain(String),
    /// The certified machinery could not reach a verdict within its limits.
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    /// Bisection bracket endpoints share the same status.
    #[error("bracket error: {0}")]
    Bracket(String),
    /// Truncated transition matrix carries no cycle.
    #[error("reducible truncation: {0}")]
    Reducible(String),
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Reducible(_) => 1,
            Error::Inconclusive(_) | Error::Bracket(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn inconclusive<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Inconclusive(msg.into()))
}
