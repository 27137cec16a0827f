use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("grid function is not in the boundary-zero space")]
    NotBoundaryZero,

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("singular tridiagonal system: pivot {modulus:e} at row {row}")]
    SingularPivot { row: usize, modulus: f64 },

    #[error("invalid mollifier cutoff {0}: must be positive and finite")]
    InvalidCutoff(f64),

    #[error("Hermite interpolation condition `{condition}` violated by {defect:e}")]
    IllConditioned { condition: &'static str, defect: f64 },

    #[error("second derivative of the initial data is required for the elliptic projection")]
    MissingSecondDerivative,

    #[error("exact solution required: {0}")]
    MissingExactSolution(&'static str),

    #[error("time index {index} out of range {min}..={max}")]
    IndexOutOfRange { index: usize, min: usize, max: usize },

    #[error("fixed-point iteration did not converge at step {step} after {iterations} iterations (last update norms: {trace:?})")]
    FixedPointDiverged {
        step: usize,
        iterations: usize,
        trace: Vec<f64>,
    },

    #[error("invalid scheme parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("solver failed at step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
