//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("invalid element {element} for group of order {order}")]
    InvalidElement { element: u64, order: u64 },

    #[error("invalid subgroup: {0}")]
    InvalidSubgroup(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("invalid construction: {0}")]
    InvalidConstruction(String),

    #[error("conditioning event has zero mass")]
    InvalidConditioning,

    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
