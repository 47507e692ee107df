use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate step size: {0}")]
    DegenerateStep(String),

    #[error("bracketing failed after {expansions} expansions: {reason}")]
    BracketingFailed { expansions: u32, reason: String },

    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),

    #[error("audit inapplicable: {0}")]
    AuditInapplicable(String),

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}
