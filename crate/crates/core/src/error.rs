use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Physical or experiment configuration is out of range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A function argument violates its precondition (empty input, N = 0, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Inputs fall outside the domain of an analytic formula, e.g. thresholds
    /// that break the `1 < beta < 2a/(1+a) < kappa < a` ordering.
    #[error("domain error: {0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
