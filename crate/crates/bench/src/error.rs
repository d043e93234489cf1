use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    /// The solver ran but produced no usable solution.
    #[error("solver failed: {0}")]
    Failed(String),
    #[error(transparent)]
    Solver(#[from] sirr_core::Error),
}

impl BenchError {
    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        BenchError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    /// Process exit code: 2 for usage and I/O problems, 1 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) | BenchError::Io { .. } => 2,
            BenchError::Failed(_) => 1,
            BenchError::Solver(e) => match e {
                sirr_core::Error::Io { .. }
                | sirr_core::Error::Parse { .. }
                | sirr_core::Error::ShapeMismatch(_)
                | sirr_core::Error::InvalidParameter(_) => 2,
                _ => 1,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
