use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid size {0} must be a power of two and at least 8")]
    InvalidGridSize(usize),

    #[error("grid length must be positive and finite, got {0}")]
    InvalidLength(f64),

    #[error("the I-operator needs a negative regularity index, got s = {0}")]
    NonNegativeRegularity(f64),

    #[error("frequency cutoff must satisfy N >= 1, got {0}")]
    InvalidCutoff(f64),

    #[error("multiplier table has {got} entries but the grid has {expected} points")]
    TableLength { expected: usize, got: usize },

    #[error("fields are defined on different grids")]
    GridMismatch,

    #[error("masses must be positive, got M = {dirac}, m = {scalar}")]
    InvalidMass { dirac: f64, scalar: f64 },

    #[error("time step must satisfy 0 < h <= 0.1, got {0}")]
    InvalidStep(f64),

    #[error("duration {duration} is not a positive integer multiple of the step {step}")]
    IncommensurateDuration { duration: f64, step: f64 },

    #[error("non-finite value in field `{field}` at t = {t}")]
    NonFinite { field: &'static str, t: f64 },

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("ratio is degenerate: the right-hand side vanishes")]
    DegenerateRatio,

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
