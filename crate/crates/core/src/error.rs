use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is rank deficient: |R[{index},{index}]| = {value:e} below threshold {threshold:e}")]
    RankDeficient { index: usize, value: f64, threshold: f64 },
    #[error("triangular matrix is singular: zero diagonal at index {0}")]
    SingularTriangular(usize),
    #[error("SVD did not converge after {sweeps} sweeps (off-diagonal {off:e})")]
    SvdNoConvergence { sweeps: usize, off: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("preconditioner construction failed after {attempts} sketch draws: {reason}")]
    PreconditionerFailure { attempts: usize, reason: String },
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
