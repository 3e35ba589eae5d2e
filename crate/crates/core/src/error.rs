use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("capacity exceeded: {what} = {got}, limit {limit}")]
    Capacity { what: &'static str, got: usize, limit: usize },

    #[error("instance generation failed: {0}")]
    GenerationFailure(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator support {support:?} out of range for {n} qubits")]
    SupportOutOfRange { support: alloc::vec::Vec<usize>, n: usize },

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("parse error at token {index} ({token:?}): {reason}")]
    Parse { index: usize, token: String, reason: String },
}
