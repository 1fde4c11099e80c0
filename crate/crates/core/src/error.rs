use thiserror::Error;

use crate::exact::FareyPoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero denominator")]
    ZeroDenominator,

    #[error("not in Farey triangle: {0}")]
    NotInTriangle(FareyPoint),

    #[error("expected a positive value, got {0}")]
    NonPositive(String),

    #[error("Farey order must lie in 1..={max}, got {got}")]
    InvalidOrder { got: u64, max: u64 },

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not a generalized arithmetic sequence: divisibility fails at index {index}")]
    NotGas { index: usize },

    #[error("sequence too short: need at least {needed} terms, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("index {0} is not a strict local maximum")]
    NotLocalMaximum(usize),

    #[error("malformed continued fraction: {0}")]
    MalformedContinuedFraction(String),

    #[error("excursion too short for monotonicity (length {0})")]
    ExcursionTooShort(u64),

    #[error("indices ({i1}, {i2}) do not delimit a sub-excursion")]
    NotSubExcursion { i1: usize, i2: usize },

    /// A proven identity or bound failed. Always an implementation bug (or a
    /// deliberately corrupted map); `witness` names the offending input.
    #[error("invariant violated in {check}: {witness}")]
    InvariantViolation { check: String, witness: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn violation(check: impl Into<String>, witness: impl Into<String>) -> Self {
        Error::InvariantViolation {
            check: check.into(),
            witness: witness.into(),
        }
    }

    pub fn is_violation(&self) -> bool {
        matches!(self, Error::InvariantViolation { .. })
    }
}
