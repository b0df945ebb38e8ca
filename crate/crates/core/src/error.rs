use thiserror::Error;

/// Errors raised across the reconstruction pipeline.
#[derive(Debug, Error)]
pub enum ShredError {
    /// A field generator or configuration block failed validation.
    #[error("invalid spec `{field}`: {reason}")]
    InvalidSpec { field: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range (len {len})")]
    Index { index: usize, len: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Non-finite values showed up in a named array.
    #[error("numeric failure in `{array}`: non-finite value")]
    NumericFailure { array: String },

    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl ShredError {
    pub(crate) fn spec(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ShredError::InvalidSpec {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        ShredError::InvalidArgument(msg.into())
    }

    /// True for failures caused by non-finite arithmetic rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, ShredError::NumericFailure { .. } | ShredError::Divergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, ShredError>;
