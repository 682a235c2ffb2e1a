use thiserror::Error;

/// Errors raised by the simulator and the analytical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scenario parameter violates one of its invariants.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// An operation received arguments it cannot work with.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A slope fit had fewer than three usable points.
    #[error("insufficient data: {usable} usable points, need at least 3")]
    InsufficientData { usable: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_config(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

pub(crate) fn invalid_input(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
