use thiserror::Error;

/// Errors raised anywhere in the monitoring pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("reference set too small: {got} points in dimension {dim}, need at least {need}")]
    ReferenceTooSmall { got: usize, dim: usize, need: usize },

    #[error("singular covariance matrix for reference set {0}")]
    SingularCovariance(String),

    #[error("simplicial depth supports dimension at most 3, got {0}")]
    UnsupportedDimension(usize),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("objective is not finite anywhere on the sphere")]
    ObjectiveNotFinite,

    #[error("zero variance in {0}")]
    ZeroVariance(String),

    #[error("no reference set for predicted class {0} and no merged fallback")]
    UnknownClass(String),

    #[error("insufficient records for class {class}: need {need}, have {available}")]
    InsufficientRecords {
        class: String,
        need: usize,
        available: usize,
    },

    #[error("record {index}: {reason}")]
    InvalidRecord { index: usize, reason: String },

    #[error("reference set {0} has no depth cache for the requested depth specification")]
    DepthCacheMismatch(String),

    #[error("training stopped at {epochs} epochs with accuracy {accuracy:.4} < 1; retry with another seed")]
    TrainingFailed { epochs: usize, accuracy: f64 },
}

/// Coarse classification used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) => ErrorKind::Usage,
            Error::SingularCovariance(_)
            | Error::NonFinite(_)
            | Error::ObjectiveNotFinite
            | Error::ZeroVariance(_)
            | Error::TrainingFailed { .. } => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
