use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// Absolute pressure at or below the admissible threshold.
    #[error("admissibility violation: pressure {pressure} is below the positive threshold {p_min}")]
    InadmissiblePressure { pressure: f64, p_min: f64 },

    /// Argument outside the domain of the principal Lambert-W branch.
    #[error("Lambert W0 domain error: argument {0} < -1/e")]
    LambertDomain(f64),

    /// Invalid or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// All-flux boundary data violating the zero-net-flux compatibility condition.
    #[error("incompatible boundary data: net boundary flux integral = {0} (must vanish)")]
    IncompatibleBoundaryData(f64),

    /// Parameter vector does not match the declared architecture.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Training aborted (non-finite loss/gradient after recovery attempts).
    #[error("training aborted: {0}")]
    Training(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
