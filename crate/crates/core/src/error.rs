use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("finite-difference direction has zero norm")]
    DegenerateDirection,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("{engine} did not converge after {iterations} iterations ({detail})")]
    NonConvergence {
        engine: &'static str,
        iterations: usize,
        detail: String,
    },

    #[error("scheme {scheme} is not defined for integrator {integrator}")]
    UnsupportedScheme {
        integrator: &'static str,
        scheme: &'static str,
    },

    #[error("step size {dt:e} at t = {t} fell below the minimum {dt_min:e}")]
    StepTooSmall { t: f64, dt: f64, dt_min: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
