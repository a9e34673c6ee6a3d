use thiserror::Error;

use crate::operators::Which;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("negative entry at ({0}, {1})")]
    NegativeEntry(usize, usize),

    #[error("row {0} sums to {1}, expected 1")]
    RowSumViolation(usize, f64),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not irreducible")]
    NotIrreducible,

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("matrix is singular (pivot {0})")]
    Singular(usize),

    #[error("I + tB is singular at t = {0}")]
    SingularShift(f64),

    #[error("inpainting mask is all zero")]
    AllZeroMask,

    #[error("blur kernel has zero or negative mass")]
    ZeroKernel,

    #[error("subsampling selects no rows")]
    EmptySelection,

    #[error("kernel bandwidth too small: row {0} has no off-diagonal mass")]
    DegenerateBandwidth(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid scan grid: {0}")]
    InvalidGrid(String),

    #[error("hypotheses unmet: {0}")]
    HypothesesUnmet(String),

    #[error("instance generation exhausted after {0} rejections")]
    GenerationExhausted(usize),

    #[error("insufficient data for rate estimate: {0}")]
    InsufficientData(String),

    #[error("{which:?} undefined at t = {t}")]
    Undefined { which: Which, t: f64 },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
