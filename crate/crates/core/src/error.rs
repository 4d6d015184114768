use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("deformed density is not integrable: {0}")]
    NonIntegrable(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("empty integration region")]
    EmptyRegion,

    #[error("quadrature failed to converge within {levels} doubling levels (last change {change:e})")]
    NoConvergence { levels: u32, change: f64 },

    #[error("recurrence lost positivity at k = {k} (b_k^2 = {b2:e})")]
    Degenerate { k: usize, b2: f64 },

    #[error("point x = {x} lies outside the support")]
    OutsideSupport { x: f64 },

    #[error("requested index {requested} exceeds available size {available}")]
    IndexOutOfRange { requested: usize, available: usize },

    #[error("numerically singular system: {0}")]
    Singular(String),

    #[error("{what}: routes disagree (relative mismatch {mismatch:e})")]
    RouteMismatch { what: String, mismatch: f64 },

    #[error("grid point ({i}, {j}) needs margin {needed} but only {available} cells are available")]
    GridMargin { i: usize, j: usize, needed: usize, available: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
