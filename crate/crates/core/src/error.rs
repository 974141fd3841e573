use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A one-time object (hash instance, key bundle) was used a second time.
    #[error("one-time violation: {0}")]
    OneTimeViolation(String),

    #[error("insufficient key material: need {needed} bits, {available} available")]
    InsufficientKey { needed: u64, available: u64 },

    /// Key bits that were already consumed were requested again.
    #[error("key reuse: offset {offset} already consumed (pool at {consumed})")]
    KeyReuse { offset: u64, consumed: u64 },

    /// A finite randomness source ran dry.
    #[error("randomness exhausted: {0}")]
    RandomnessExhausted(String),

    #[error("message authentication failed: {0}")]
    AuthenticationFailed(String),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
