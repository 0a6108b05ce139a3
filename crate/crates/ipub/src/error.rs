//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IpubError {
    #[error("invalid training data: {0}")]
    InvalidData(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dual-infeasible value {value} (requires {bound})")]
    DualInfeasible { value: f64, bound: &'static str },

    #[error("weak duality violated: primal - dual = {gap}")]
    WeakDualityViolation { gap: f64 },

    #[error("negative delta summand {value} at {place}")]
    NegativeSummand { value: f64, place: String },

    #[error("missing index inconsistent with interval matrix: {0}")]
    IndexMismatch(String),

    #[error("interval enclosure failure: {0}")]
    EnclosureFailure(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("csv parse error at line {line}: {msg}")]
    CsvParse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
