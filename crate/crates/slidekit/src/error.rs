//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Linear-quadratic contrasts are defined for 2- or 3-level factors only.
    #[error("factor {factor} has {n} levels; linear-quadratic contrasts need 2 or 3")]
    UnsupportedLevelCount { factor: String, n: usize },

    /// A sliding table lookup failed for a (parent level, slid level) pair.
    #[error("missing sliding entry: {0}")]
    MissingSlidingEntry(String),

    /// A planning-matrix cell holds a label the factor does not declare.
    #[error("unknown level label {label:?} for factor {factor}")]
    UnknownLevelLabel { factor: String, label: String },

    /// Malformed input file; `line` is 1-based, 0 when unknown.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An invariant of the domain types was violated; the message names it.
    #[error("validation error: {0}")]
    Validation(String),

    /// Proportional coding needs at least two distinct settings.
    #[error("degenerate range for factor {factor}: min equals max ({value})")]
    DegenerateRange { factor: String, value: f64 },

    /// Strict coding rejects values outside the observed settings range.
    #[error("value {value} for factor {factor} is outside its settings range [{min}, {max}]")]
    OutOfRange {
        factor: String,
        value: f64,
        min: f64,
        max: f64,
    },

    /// Monomial exponents are capped at 3.
    #[error("unsupported degree {degree}: monomial exponents are capped at 3")]
    UnsupportedDegree { degree: u32 },

    /// The model matrix has linearly dependent columns.
    #[error("rank deficient model matrix (rank {rank}); dependent terms: {terms:?}")]
    RankDeficient { rank: usize, terms: Vec<String> },

    /// A nested-effects model needs distinct parent levels.
    #[error("duplicate parent level {value}")]
    DuplicateParentLevel { value: f64 },

    /// Nested-effects prediction is only defined at the fitted parent levels.
    #[error("parent value {x_a} matches no fitted level; nested effects exist only at {levels:?}")]
    OffDesignParentLevel { x_a: f64, levels: Vec<f64> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
