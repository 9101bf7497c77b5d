use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid profile pair: {0}")]
    InvalidPair(String),

    #[error("order violation: {0}")]
    Order(String),

    #[error("enumeration budget exceeded: {required} > {budget}")]
    Budget { required: u128, budget: u128 },

    #[error("numeric error: {0}")]
    Numeric(String),

    /// A coupling cell came out negative beyond round-off. This certifies that
    /// the pair is not aligned or the rule is not local and monotone.
    #[error("alignment violation: coupling cell {cell} = {value:e}")]
    AlignmentViolation { cell: String, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
