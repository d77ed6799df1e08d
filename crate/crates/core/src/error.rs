use thiserror::Error;

/// Errors raised by model evaluation, estimation and data handling.
#[derive(Debug, Error)]
pub enum DprhError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("estimate undefined: {0}")]
    EstimateUndefined(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl DprhError {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        DprhError::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// True for failures that come from the numerics (non-convergence, singular
    /// information, etc.) rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            DprhError::Numerical(_) | DprhError::Convergence(_) | DprhError::EstimateUndefined(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, DprhError>;
