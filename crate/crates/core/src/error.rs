use thiserror::Error;

use crate::worthwhile::TrapReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("point is outside the search space")]
    OutsideSpace,

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("search space is empty")]
    EmptySpace,

    #[error("probe refused: {0}")]
    ProbeRefused(String),

    /// Trap status flipped from trapped to free as λ increased. This contradicts
    /// the nesting W_λ'(x) ⊆ W_λ(x) for λ' > λ and points at a membership bug.
    #[error("trap monotonicity violated between λ = {} and λ = {}", .before.lambda, .after.lambda)]
    TrapMonotonicity {
        before: Box<TrapReport>,
        after: Box<TrapReport>,
    },
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
