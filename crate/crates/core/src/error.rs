use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum FkpError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("spectral data is not conjugate-symmetric (relative defect {defect:.3e})")]
    SymmetryViolation { defect: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unsupported equation: {0}")]
    UnsupportedEquation(String),

    #[error("invalid configuration for `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("degenerate iterate: {0}")]
    DegenerateIterate(String),

    #[error("iteration diverged: {0}")]
    Divergence(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("invalid exponent p = {0}: the transverse integral requires p > 1/2")]
    InvalidExponent(f64),

    #[error("field file magic mismatch: found {found:?}")]
    MagicMismatch { found: [u8; 4] },

    #[error("unsupported field file version {0}")]
    VersionMismatch(u32),

    #[error("field file truncated at byte offset {offset}")]
    Truncated { offset: u64 },

    #[error("corrupt field file at byte offset {offset}: {reason}")]
    Corrupt { offset: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FkpError>;

impl FkpError {
    /// Stable short identifier, one per variant.
    pub fn code(&self) -> &'static str {
        match self {
            FkpError::InvalidGrid(_) => "invalid-grid",
            FkpError::InvalidField(_) => "invalid-field",
            FkpError::SymmetryViolation { .. } => "symmetry-violation",
            FkpError::GridMismatch(_) => "grid-mismatch",
            FkpError::UnsupportedEquation(_) => "unsupported-equation",
            FkpError::InvalidConfig { .. } => "invalid-config",
            FkpError::DegenerateIterate(_) => "degenerate-iterate",
            FkpError::Divergence(_) => "divergence",
            FkpError::OutOfRange(_) => "out-of-range",
            FkpError::InvalidExponent(_) => "invalid-exponent",
            FkpError::MagicMismatch { .. } => "magic-mismatch",
            FkpError::VersionMismatch(_) => "version-mismatch",
            FkpError::Truncated { .. } => "truncated",
            FkpError::Corrupt { .. } => "corrupt",
            FkpError::Io(_) => "io",
        }
    }

    pub(crate) fn config(key: &str, reason: impl Into<String>) -> Self {
        FkpError::InvalidConfig {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}
