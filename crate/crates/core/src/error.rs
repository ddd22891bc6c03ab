use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("matrix has a negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("zero direct gain for link {index}; geometry is degenerate")]
    ZeroDirectGain { index: usize },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NoConvergence {
        iterations: usize,
        estimate: f64,
        vector: Vec<f64>,
    },

    #[error("SINR targets are infeasible: spectral radius {rho} >= 1")]
    Infeasible { rho: f64 },

    #[error("target spectral radius {kappa} must satisfy {lower} < kappa < 1")]
    KappaOutOfRange { kappa: f64, lower: f64 },

    #[error("femtocell {index} has zero gain to the macrocell")]
    InvisibleFemtocell { index: usize },

    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
