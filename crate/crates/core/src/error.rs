use thiserror::Error;

/// Errors produced by the construction, verification and reconstruction routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input vectors are numerically linearly dependent (residual {residual:.3e} at index {index})")]
    Dependency { index: usize, residual: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("enumeration of {required} cases exceeds the cap of {cap}")]
    Resource { required: u128, cap: u128 },

    #[error("measurements are inconsistent (residual {residual:.3e})")]
    Inconsistent { residual: f64 },

    #[error("sign recovery is ambiguous: {0} consistent sign patterns")]
    Ambiguous(usize),

    #[error("not a witness: {0}")]
    NotAWitness(String),

    /// A rank-one null element `uu^T`: every subspace annihilates `u`.
    #[error("rank-one witness: the family annihilates a nonzero vector")]
    RankOneWitness { annihilated: Vec<f64> },

    #[error("resampling budget of {0} attempts exhausted")]
    BudgetExhausted(usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
