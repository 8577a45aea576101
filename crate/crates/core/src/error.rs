//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors produced by table, sampling, projection, and estimator operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Schema construction or role resolution failed.
    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    /// A table with zero total mass cannot be normalized.
    #[error("table has zero total mass")]
    ZeroMass,

    /// A distribution must carry unit mass.
    #[error("cells sum to {0}, expected total mass 1")]
    NotNormalized(f64),

    /// A marginal spec referenced a variable the schema does not contain.
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    /// Outer products require disjoint variable sets.
    #[error("variable `{0}` appears in both operands")]
    OverlappingVariables(String),

    /// Conditioning on a group that carries no mass.
    #[error("conditioning group ({0}) has zero mass")]
    ConditioningOnNull(String),

    /// Two tables were expected to share a domain.
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    /// A sample places counts outside the support of the reference distribution.
    #[error("cell {0} has a positive count but zero reference probability")]
    SupportViolation(usize),

    /// A hypergeometric sample exceeds its population cellwise.
    #[error("sample count {sample} exceeds population count {population} in cell {cell}")]
    InfeasibleSample {
        cell: usize,
        sample: u64,
        population: u64,
    },

    /// The asymptotic expansion requires a strictly positive distribution.
    #[error("cell {0} is not strictly positive")]
    NonpositiveCell(usize),

    /// A marginal constraint does not match the seed's domain.
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    /// Solver configuration outside its admissible range.
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    /// The mixture parameter must lie in the unit interval.
    #[error("delta must lie in [0, 1], got {0}")]
    InvalidDelta(f64),

    /// An exposure (or exposure-stratum) group carries no mass.
    #[error("group ({0}) has zero mass")]
    EmptyGroup(String),

    /// A scalar ratio of two odds or risks is 0/0 or inf/inf.
    #[error("ratio undefined: {0}")]
    UndefinedRatio(String),

    /// The pooled denominator of a Mantel-Haenszel estimator vanished.
    #[error("pooled denominator is zero")]
    ZeroDenominator,

    /// A delta grid violated its contract (sorted, within [0, 1], non-empty).
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Malformed count CSV input.
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
