use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library. Numerical degeneracies that have a
/// well-defined value (infinite divergences, vacuous bounds) are reported as
/// values, not errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("symbol {symbol} out of range for alphabet of size {alphabet_size}")]
    SymbolOutOfRange { symbol: usize, alphabet_size: usize },

    #[error("empty sequence has no type")]
    EmptySequence,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("value {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("training length {actual} does not match round({alpha} * {n}) = {expected}")]
    RatioMismatch {
        alpha: f64,
        n: usize,
        expected: usize,
        actual: usize,
    },

    #[error("a reachable label has zero probability; the conditional entropy is infinite")]
    InfiniteEntropy,

    #[error("degenerate channel: log P(Y|X) has zero variance, use the noiseless/trivial bound")]
    DegenerateChannel,

    #[error("n = {n} is too small for the achievability threshold; need n >= {minimal_n}")]
    SampleSizeTooSmall { n: usize, minimal_n: usize },

    #[error("predictor error {error} exceeds the significance level {alpha}")]
    PredictorMiscoverage { error: f64, alpha: f64 },

    #[error("enumeration of {size} outcomes exceeds the limit {limit}")]
    TooLarge { size: u128, limit: u128 },

    #[error("dynamic program needs {cells} cells, budget is {budget}")]
    CellBudgetExceeded { cells: usize, budget: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
