use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Precondition violated by the caller (bad sizes, ranges, parameters).
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("shape mismatch for {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("singular tridiagonal system: pivot {pivot:e} at row {row}")]
    Singular { row: usize, pivot: f64 },

    #[error("step size underflow at t = {t}: dt = {dt:e} < dt_min")]
    StepUnderflow { t: f64, dt: f64 },

    #[error("maximum step count {max_steps} exceeded at t = {t}")]
    MaxSteps { max_steps: usize, t: f64 },

    #[error("series did not converge within {max_terms} terms (z = {z}, tv = {tv})")]
    SeriesNotConverged { z: f64, tv: f64, max_terms: usize },

    #[error("covariance factorization failed after jitter escalation (last jitter {jitter:e})")]
    Factorization { jitter: f64 },

    #[error("solve failed for case seed {seed}: {source}")]
    CaseSolve {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("backward pass called with a stale forward cache")]
    StaleCache,

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("zero standard deviation in standardization statistics for {0}")]
    ZeroStd(String),

    #[error("{path}: invalid field `{field}`: {msg}")]
    Format {
        path: PathBuf,
        field: String,
        msg: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn format(path: impl Into<PathBuf>, field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            field: field.into(),
            msg: msg.into(),
        }
    }

    /// Process exit code used by the command-line tool.
    ///
    /// 2 = validation error, 3 = numerical failure, 4 = I/O or file-format error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Shape { .. } | Error::ZeroStd(_) => 2,
            Error::Numerical(_)
            | Error::Singular { .. }
            | Error::StepUnderflow { .. }
            | Error::MaxSteps { .. }
            | Error::SeriesNotConverged { .. }
            | Error::Factorization { .. }
            | Error::StaleCache
            | Error::Divergence { .. } => 3,
            Error::CaseSolve { source, .. } => source.exit_code(),
            Error::Format { .. } | Error::Io(_) | Error::Json(_) => 4,
        }
    }
}
