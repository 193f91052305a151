use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("derivative is singular at the branch point z = -1/e")]
    Singularity,

    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// The delay is outside the admissible range. The (non-positive) decay
    /// rate is still reported.
    #[error("delay {tau} is outside the admissible range (decay rate {rate})")]
    Unstable { tau: f64, rate: f64 },

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by bad user input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::Domain(_) | Error::Dimension { .. } | Error::Parse(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
