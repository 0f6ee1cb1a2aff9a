//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation contract (index length, parameter
    /// range, shape mismatch, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A dense materialization would exceed the configured entry cap.
    #[error("dense size {size} exceeds cap {cap}")]
    DenseCap { size: u128, cap: u64 },

    /// Numerical failure (non-finite data, SVD breakdown, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed serialized container.
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
