use thiserror::Error;

/// Errors raised by scenario construction, model building and solving.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("could not place hotspot {index} after {attempts} attempts")]
    HotspotPlacement { index: usize, attempts: usize },

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("model has no flows")]
    EmptyDemands,

    #[error("instance exceeds the enumeration budget: {0}")]
    EnumerationBudget(String),

    #[error("no feasible placement: {0}")]
    Infeasible(String),

    #[error("numerical failure in the LP kernel: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
