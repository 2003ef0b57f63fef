use std::fmt;

use thiserror::Error;

/// Which budget line of a [`crate::channels::CostMeter`] overflowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Resource {
    Steps,
    ParallelRounds,
    Space,
    OracleQueries,
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Resource::Steps => "steps",
            Resource::ParallelRounds => "parallel rounds",
            Resource::Space => "space units",
            Resource::OracleQueries => "oracle queries",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("alphabet mismatch: q={left} vs q={right}")]
    AlphabetMismatch { left: u32, right: u32 },
    #[error("empty input")]
    EmptyInput,
    #[error("empty reference word")]
    EmptyReference,
    #[error("symbol {symbol} outside alphabet of size {q}")]
    SymbolOutOfRange { symbol: u32, q: u32 },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("message length {k} exceeds cap {cap}")]
    MessageTooLong { k: usize, cap: usize },
    #[error("oracle length {actual} does not match expected {expected}")]
    OracleLengthMismatch { expected: usize, actual: usize },
    #[error("security parameter {lambda} below floor {min}")]
    LambdaTooSmall { lambda: u32, min: u32 },
    #[error("randomness source failed: {0}")]
    InsufficientEntropy(String),
    #[error("block {block} could not be decoded")]
    DecodeFailure { block: usize },
    #[error("{blocks} blocks do not fit in {idx_bits} header bits")]
    TooManyBlocks { blocks: usize, idx_bits: u32 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(Resource),
    #[error("budget of {available} edits cannot cover the {needed} needed")]
    BudgetTooSmall { needed: usize, available: usize },
    #[error("unknown channel id {0:?}")]
    UnknownChannel(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
