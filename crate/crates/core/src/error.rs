use thiserror::Error;

/// Errors produced while building codes, validating inputs or running experiments.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid octal generator {0:?}")]
    BadOctal(String),
    #[error("generator {generator:o} has degree {degree}, but at most {max} is allowed")]
    DegreeOverflow { generator: u64, degree: u32, max: u32 },
    #[error("invalid code parameters: {0}")]
    InvalidCode(String),
    #[error("block length {length} is shorter than the encoder memory ({memory} segments)")]
    TooShort { length: usize, memory: usize },
    #[error("segment {ell} is outside 1..={length}")]
    SegmentOutOfRange { ell: usize, length: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid channel parameters: {0}")]
    InvalidChannel(String),
    #[error("state {state} out of range for {states} states")]
    StateOutOfRange { state: usize, states: usize },
    #[error("candidate is not a tail-biting path: {0}")]
    NotTailBiting(String),
    #[error("codebook of 2^{bits} words exceeds the cap of 2^{cap}")]
    CapExceeded { bits: usize, cap: usize },
    #[error("unknown decoder {0:?}")]
    UnknownDecoder(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
