use thiserror::Error;

use crate::hilbert::Verdict;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operator is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("tensor product of an empty factor list")]
    EmptyFactors,

    #[error("invalid subsystem layout: {0}")]
    InvalidLayout(String),

    #[error("subsystem index {index} out of range for a layout with {count} subsystems")]
    SubsystemOutOfRange { index: usize, count: usize },

    #[error("{0}")]
    Invalid(Verdict),

    #[error("state vector has zero norm")]
    ZeroVector,

    /// A boundary projection has vanishing weight, i.e. the boundary
    /// condition cannot be reached from the other boundary.
    #[error("impossible boundary: projection weight {weight:.3e} is not above {tolerance:.1e}")]
    ImpossibleBoundary { weight: f64, tolerance: f64 },

    #[error("no history sequence is consistent with the boundaries (normalization {normalization:.3e})")]
    AllWeightsZero { normalization: f64 },

    #[error("history enumeration needs {requested} sequences, cap is {cap}")]
    SequenceCapExceeded { requested: u128, cap: usize },

    #[error("history slot {slot}: {reason}")]
    InvalidSlot { slot: usize, reason: String },

    #[error("label {label} out of range for slot {slot} with {size} projectors")]
    LabelOutOfRange { slot: usize, label: usize, size: usize },

    #[error("expected {expected} interval unitaries, found {found}")]
    IntervalCount { expected: usize, found: usize },

    #[error("interval {interval} has a factor without subsystem tags")]
    UntaggedInterval { interval: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
