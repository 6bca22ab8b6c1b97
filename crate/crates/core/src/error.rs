use thiserror::Error;

use crate::optimizer::IterationRecord;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("group {group_a} element {elem_a} vs group {group_b} element {elem_b}: {source}")]
    GeometryAt {
        group_a: usize,
        elem_a: usize,
        group_b: usize,
        elem_b: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix {what} is singular to working precision (condition number {cond:.3e})")]
    Singular { what: String, cond: f64 },

    #[error("Neumann expansion refused: spectral norm of Delta*X is {norm:.6e}, must be < 1")]
    NeumannPrecondition { norm: f64 },

    #[error("{what} did not converge: {detail}")]
    Convergence { what: String, detail: String },

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("optimizer diverged at iteration {iteration} (sum-rate kept dropping)")]
    Diverged {
        iteration: usize,
        trace: Vec<IterationRecord>,
    },

    #[error("invalid scenario at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("scenario parse error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation { .. }
                | Error::Json(_)
                | Error::Geometry(_)
                | Error::GeometryAt { .. }
                | Error::Domain(_)
                | Error::Dimension(_)
        )
    }

    /// Process exit code used by the command line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Csv(_) => 1,
            e if e.is_validation() => 2,
            _ => 3,
        }
    }
}
