use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),

    #[error("spectrum {min:.3e}..{max:.3e} lies outside [0, 1]")]
    NotAnEffect { min: f64, max: f64 },

    #[error("not a state: {0}")]
    NotAState(String),

    #[error("invalid POVM generator: {0}")]
    InvalidGenerator(String),

    #[error("phase density is negative ({value:.3e} at theta = {theta:.6})")]
    NegativeDensity { theta: f64, value: f64 },

    #[error("malformed arc [{lo}, {hi}]")]
    MalformedArc { lo: f64, hi: f64 },

    #[error("epsilon {0} outside [0, 1)")]
    EpsilonOutOfRange(f64),

    #[error("channel is not a restriction: {0}")]
    NotARestriction(String),

    #[error("effect is not invariant (defect {0:.3e})")]
    NotInvariant(f64),

    #[error("effect is not a projection (unsharpness {0:.3e})")]
    NotAProjection(f64),

    #[error("system representation lacks number eigenvalue {0}")]
    MissingLevel(i64),

    #[error("operator is not an isometry (defect {0:.3e})")]
    NotAnIsometry(f64),

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("independent evaluations disagree by {0:.3e}")]
    RouteMismatch(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
