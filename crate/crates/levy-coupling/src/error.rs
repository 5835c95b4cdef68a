use thiserror::Error;

/// Errors surfaced by measure algebra, simulation, and the CLI layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    #[error(
        "offset {offset} is not a multiple of grid spacing {spacing} and snapping is disabled"
    )]
    SnapError { offset: f64, spacing: f64 },

    /// `achieved` is the last convolution power completed before the size
    /// budget would have been exceeded.
    #[error("convolution budget of {budget} exceeded (last completed power: {achieved})")]
    BudgetExceeded { achieved: usize, budget: usize },

    #[error("displacement between start points is zero")]
    ZeroDisplacement,

    #[error("rotating a grid density is only supported in dimension 1, got {dim}")]
    DensityRotationUnsupported { dim: usize },

    #[error("truncation at radius {radius} removed all mass")]
    EmptyTruncation { radius: f64 },

    #[error("measure has zero total mass")]
    ZeroMass,

    #[error("overlap mass for the requested displacement is zero; no coupling step law exists")]
    DegenerateOverlap,

    #[error("criterion failed: {0}")]
    CriterionFailed(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
