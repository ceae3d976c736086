use thiserror::Error;

/// Errors reported by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular or numerically singular ({context})")]
    SingularMatrix { context: String },

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPositiveSemidefinite { min_eig: f64 },

    #[error("problem dimension {n} exceeds the dense limit {cap}")]
    TooLargeForDense { n: usize, cap: usize },

    #[error("pencil is not stabilizable: {0}")]
    NotStabilizable(String),

    #[error("{count} unstable eigenvalues exceed the cap of {cap}")]
    TooManyUnstable { count: usize, cap: usize },

    #[error("inner solver stagnated after {iterations} iterations (residual {residual:e})")]
    StagnationNoConvergence { iterations: usize, residual: f64 },

    #[error("shifted system is singular at shift {shift}")]
    ShiftedSystemSingular { shift: num_complex::Complex64 },

    #[error("outer iteration limit of {0} reached")]
    MaxOuterExceeded(usize),

    #[error("outer iteration diverged: {0}")]
    Diverged(String),

    #[error("no stabilizing solution: {0}")]
    NoStabilizingSolution(String),

    #[error("no admissible shift: {0}")]
    ShiftFailure(String),

    #[error("inner solver failed in outer step {step}: {source}")]
    InnerSolverFailure { step: usize, source: Box<Error> },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// The underlying error with outer-step wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::InnerSolverFailure { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_check(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(what()))
    }
}
