use thiserror::Error;

/// Errors produced by the analysis pipeline.
#[derive(Debug, Error)]
pub enum GermError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rank deficiency: {0}")]
    RankError(String),

    #[error("containment violated: {0}")]
    ContainmentError(String),

    #[error("consistency check failed: {0}")]
    ConsistencyError(String),

    #[error("matrix is not symplectic (residual {residual:.3e})")]
    NotSymplectic { residual: f64 },

    #[error("operator {index} is not stable: {reasons:?}")]
    StabilityError { index: usize, reasons: Vec<String> },

    #[error("operators {i} and {j} do not commute (residual {residual:.3e})")]
    CommutationError { i: usize, j: usize, residual: f64 },

    #[error("quotient flag invariance violated for operator {index} (residual {residual:.3e})")]
    InvarianceError { index: usize, residual: f64 },

    #[error("degenerate Krein form on cluster {cluster}: {detail}")]
    DegenerateKrein { cluster: String, detail: String },

    #[error("integration diverged at t = {time}")]
    Divergence { time: f64 },

    #[error("period candidate rejected: return residual {residual:.3e} exceeds {tol:.3e}")]
    PeriodRejected { residual: f64, tol: f64 },

    #[error("invalid model: {0}")]
    ModelError(String),

    #[error("linear algebra backend failure: {0}")]
    Backend(String),

    #[error("no complex germ exists: {0}")]
    NoGerm(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("invalid input: {0}")]
    InputError(String),
}

pub type Result<T> = std::result::Result<T, GermError>;

impl From<ndarray_linalg::error::LinalgError> for GermError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        GermError::Backend(e.to_string())
    }
}
