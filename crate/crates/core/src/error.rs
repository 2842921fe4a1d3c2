use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    EigenNonConvergence { iterations: usize, residual: f64 },

    #[error("shifted matrix is not positive definite (shift {shift:e})")]
    NotPositiveDefinite { shift: f64 },

    #[error(
        "secular equation did not converge after {iterations} iterations, bracket [{lo:e}, {hi:e}]"
    )]
    SecularNonConvergence { iterations: usize, lo: f64, hi: f64 },

    #[error("run diverged at epoch {epoch}, inner step {step}: f = {value:e}")]
    Divergence {
        epoch: usize,
        step: usize,
        value: f64,
    },

    #[error("subproblem solve failed at epoch {epoch}, inner step {step}: {source}")]
    Subproblem {
        epoch: usize,
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigenNonConvergence { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::SecularNonConvergence { .. }
                | Error::Divergence { .. }
                | Error::Subproblem { .. }
        )
    }
}
