use thiserror::Error;

/// Errors raised by the library. The CLI maps `Validation`-like variants to
/// exit code 1 and `NumericalAbort` to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported Bessel order nu = {0}")]
    UnsupportedOrder(f64),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("lattice sum cannot reach tolerance {tolerance:e}: {reason}")]
    ToleranceUnreachable { tolerance: f64, reason: String },

    #[error("numerical abort at t = {time}: {reason}")]
    NumericalAbort { time: f64, reason: String },

    #[error("comparison error: {0}")]
    Comparison(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericalAbort { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
