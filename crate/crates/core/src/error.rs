use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at node {index}")]
    NonFinite { index: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("no shooting bracket below w(0) = {max:.3e}")]
    NoBracket { max: f64 },

    #[error("under-resolved: {0}")]
    Resolution(String),

    #[error("{op} requires regime {required}, got {got}")]
    RegimeMismatch {
        op: &'static str,
        required: &'static str,
        got: String,
    },

    #[error("component has zero mass, cannot project to the sphere")]
    ZeroMass,

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    Unconverged { iterations: usize, residual: f64 },

    #[error("mountain-pass geometry not established: {0}")]
    Geometry(String),
}

pub type Result<T> = std::result::Result<T, Error>;
