use thiserror::Error;

/// Errors produced by the evaluation, search, refinement and certification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Every height is zero after clipping, so the objective is 0/0.
    #[error("degenerate input: all heights are zero after clipping")]
    Degenerate,

    /// The objective overflowed or otherwise left the finite range.
    #[error("non-finite objective value {value}")]
    NonFinite { value: f64 },

    #[error("non-finite objective at ascent iteration {iteration}: {value}")]
    AscentDiverged { iteration: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("step {step} requested in the wrong phase: {reason}")]
    Phase { step: u64, reason: String },

    #[error("every candidate in the batch degenerated")]
    AllDegenerate,

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("line {line}, token {index} ({token:?}): {reason}")]
    Parse {
        line: usize,
        index: usize,
        token: String,
        reason: String,
    },

    #[error("line {line}, token {index}: negative height {token}")]
    NegativeHeight {
        line: usize,
        index: usize,
        token: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
