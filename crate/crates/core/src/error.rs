use thiserror::Error;

/// Errors produced by the group, polynomial, solver and verification layers.
#[derive(Debug, Error)]
pub enum CarnotError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid group specification: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dilation factor must be positive, got {0}")]
    NonPositiveDilation(f64),

    #[error("unknown group name {0:?}")]
    UnknownGroup(String),

    #[error("singular matching system at pivot {pivot}")]
    SingularSystem { pivot: usize },

    #[error("derivative estimation failed: {0}")]
    DerivativeEstimation(String),

    #[error("grid has an empty interior")]
    EmptyInterior,

    #[error(
        "linear solver did not converge: final relative residual {final_residual:e} after {iterations} iterations"
    )]
    SolverNonConvergence {
        iterations: usize,
        final_residual: f64,
        residual_history: Vec<f64>,
    },

    #[error("point lies outside the interpolation hull")]
    OutsideHull,

    #[error("gradient norm vanishes: {0}")]
    ZeroGradient(String),

    #[error("function is not L-harmonic (max residual {residual:e})")]
    NotHarmonic { residual: f64 },

    #[error("mean value inequality violated: numerator {numerator:e} with vanishing gradient")]
    MeanValueViolation { numerator: f64 },

    #[error("integral diverges at the lower endpoint (decade-increment exponent {exponent:.3})")]
    Divergent { exponent: f64 },

    #[error("level {level} outside computed range 0..={max}")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("degenerate data for fit: {0}")]
    DegenerateFit(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CarnotError>;
