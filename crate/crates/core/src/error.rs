use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("time {t} outside [0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("grid too coarse: dt = {dt} exceeds {limit} ({what})")]
    GridTooCoarse { dt: f64, limit: f64, what: &'static str },

    #[error("{what} diverged at t = {time}")]
    Divergence { what: &'static str, time: f64 },

    #[error("integrator fault at t = {time}: {reason}")]
    IntegratorFault { time: f64, reason: String },

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("empty scan")]
    EmptyScan,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag, used by the CLI error record.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::InvalidConfig(_) => "invalid_config",
            Error::OutOfRange { .. } => "out_of_range",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::GridTooCoarse { .. } => "grid_too_coarse",
            Error::Divergence { .. } => "divergence",
            Error::IntegratorFault { .. } => "integrator_fault",
            Error::EmptyEnsemble => "empty_ensemble",
            Error::EmptyScan => "empty_scan",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
