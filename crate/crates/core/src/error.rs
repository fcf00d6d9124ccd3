use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Energy leaked into the top quarter of the spectrum.
    #[error("resolution failure at t = {time}: tail fraction {tail:e} exceeds {limit:e}")]
    ResolutionFailure { time: f64, tail: f64, limit: f64 },

    #[error("field under-resolved: tail fraction {tail:e} exceeds {limit:e}")]
    UnderResolved { tail: f64, limit: f64 },

    #[error("domain too short for soliton: boundary/peak ratio {ratio:e} exceeds {limit:e}")]
    InsufficientDomain { ratio: f64, limit: f64 },

    #[error("brute-force form refused: {points} grid points exceeds the limit of {limit}")]
    CostGuard { points: usize, limit: usize },

    #[error("orthogonality root not bracketed near x0 = {center}; best residual {best_residual:e}")]
    RootNotFound { center: f64, best_residual: f64 },

    #[error("modulation denominator {value:e} below {limit:e}")]
    SmallDenominator { value: f64, limit: f64 },

    #[error("need at least {needed} points for a slope, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by user-supplied parameters rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::InvalidInput(_)
                | Error::Config(_)
                | Error::InsufficientDomain { .. }
                | Error::CostGuard { .. }
                | Error::InsufficientPoints { .. }
                | Error::Json(_)
        )
    }
}
