use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("rank deficient frame: {0}")]
    RankDeficient(String),
    #[error("not Lagrangian: residual {residual:e} exceeds {tol:e}")]
    NotLagrangian { residual: f64, tol: f64 },
    #[error("not symplectic: residual {residual:e} exceeds {tol:e}")]
    NotSymplectic { residual: f64, tol: f64 },
    #[error("resymplectification failed: {0}")]
    Resymplectify(String),
    #[error("degenerate path: {0}")]
    DegeneratePath(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("not periodic: {0}")]
    NotPeriodic(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the inputs rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_) | Error::Invalid(_) | Error::RankDeficient(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
