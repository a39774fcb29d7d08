use thiserror::Error;

use crate::ring::RingError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("column index {0} out of range")]
    ColumnOutOfRange(usize),
    #[error("{erased} columns erased but at most {max} can be recovered")]
    TooManyErasures { erased: usize, max: usize },
    #[error("decoding failed: {0}")]
    DecodeFailed(String),
    #[error("helper column {0} is not available")]
    MissingHelper(usize),
    #[error("not enough helper columns to repair column {failed}")]
    InsufficientHelpers { failed: usize },
    #[error("invalid repair sets: {0}")]
    InvalidRepairSets(String),
    #[error("repair bound d*m/(d-k+1) = {numerator}/{denominator} is not an integer")]
    NonIntegralBound { numerator: u64, denominator: u64 },
    #[error("malformed access trace: {0}")]
    MalformedTrace(String),
}

pub type Result<T> = std::result::Result<T, CodeError>;
