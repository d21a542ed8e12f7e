use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported model or dimension: {0}")]
    Unsupported(String),
    #[error("no closed-form spectrum for {0}; use a discrete eigensolve instead")]
    NoClosedForm(String),
    #[error("spectrum table too short to decide membership; need k_max >= {needed}")]
    TableTooShort { needed: u64 },
    #[error("field kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },
    #[error("atlas mismatch: {0}")]
    AtlasMismatch(String),
    #[error("metric not positive definite at node {node} (chart {chart}), smallest eigenvalue {min_eig:e}")]
    NotPositiveDefinite { chart: usize, node: usize, min_eig: f64 },
    #[error("normalization constraint violated: (2pi)^(-n/2) * int e^(-f) = {measured}")]
    ConstraintViolated { measured: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("kernel dimension undecidable at this resolution: {0}")]
    Undecidable(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("representation integrity failure: {0}")]
    Integrity(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
