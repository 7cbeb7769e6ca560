use thiserror::Error;

/// Errors raised by the repeater-chain library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} for {what} is outside {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("residual has a nonzero syndrome")]
    NonzeroSyndrome,
    #[error("internal consistency failure: {0}")]
    Consistency(String),
    #[error("query fidelity {0} lies outside the map grid")]
    OutsideHull(f64),
    #[error("code never breaks even on this grid")]
    NoBreakEven,
    #[error("malformed map cache: {0}")]
    MalformedCache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
