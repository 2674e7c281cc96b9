use thiserror::Error;

/// Errors raised by the simulator and the bound calculators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The channel delivered almost nothing; raised when the discard rate
    /// passes the session's ceiling.
    #[error("session aborted: {discards} of {attempts} rounds discarded")]
    AbortedSession { attempts: u64, discards: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}
