use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the domain of a function (e.g. a negative radius).
    #[error("domain error: {0}")]
    Domain(String),
    /// A precondition of an operation was violated.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A trajectory left every bounded set or produced a non-finite value.
    #[error("blow-up at t = {time} in component {component}: {detail}")]
    BlowUp {
        time: f64,
        component: usize,
        detail: String,
    },
    /// A comparison function could not be inverted.
    #[error("not invertible: {0}")]
    NotInvertible(String),
    /// Malformed textual input (expressions, catalog references, JSON).
    #[error("parse error: {0}")]
    Parse(String),
    /// A certification step could not establish its claim.
    #[error("certification failed: {0}")]
    Certification(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}
