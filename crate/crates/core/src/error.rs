use thiserror::Error;

/// Errors produced by the modelling pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("stationarity pre-test refused the series: ADF statistic {statistic:.4}, p = {p_value:.3e} (threshold {threshold:.1e})")]
    NonStationary {
        statistic: f64,
        p_value: f64,
        threshold: f64,
    },

    #[error("optimization failed: {0}")]
    Optimization(String),

    /// Message names the requested scenario and the valid ones.
    #[error("{0}")]
    UnknownScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
