use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("2S must be a non-negative integer, got S = {0}")]
    InvalidSpin(f64),

    #[error("boson truncation must keep at least 2 levels, got d = {0}")]
    InvalidTruncation(usize),

    #[error("matrix is not Hermitian (max |A - A^dagger| = {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid hardware spec: {0}")]
    InvalidHardware(String),

    #[error("invalid target spec: {0}")]
    InvalidTarget(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("eigenstates cannot be labeled by product states (min overlap {min_overlap:.4})")]
    Labeling { min_overlap: f64 },

    #[error("factorization condition violated: min product overlap {min_overlap:.4} < {threshold}")]
    Factorization { min_overlap: f64, threshold: f64 },

    #[error("hardware shape mismatch: {0}")]
    HardwareShape(String),

    #[error("no allowed transition between levels {from} and {to}")]
    MissingTransition { from: String, to: String },

    #[error("cannot schedule pulse on {transition}: {reason}")]
    Scheduling { transition: String, reason: String },

    #[error("time step {dt_ns} ns exceeds limit {limit_ns} ns for carrier {carrier_ghz} GHz")]
    TimeStepTooLarge {
        dt_ns: f64,
        limit_ns: f64,
        carrier_ghz: f64,
    },

    #[error("rotating-wave approximation invalid for segment {index}: Rabi/carrier = {ratio:.4}")]
    RwaInvalid { index: usize, ratio: f64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for invalid input, 3 for a failed physics check,
    /// 4 for a scheduling failure, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidSpin(_)
            | Error::InvalidTruncation(_)
            | Error::NotHermitian(_)
            | Error::InvalidHardware(_)
            | Error::InvalidTarget(_)
            | Error::UnknownPreset(_)
            | Error::HardwareShape(_)
            | Error::Config(_)
            | Error::Json(_) => 2,
            Error::Labeling { .. }
            | Error::Factorization { .. }
            | Error::TimeStepTooLarge { .. }
            | Error::RwaInvalid { .. } => 3,
            Error::MissingTransition { .. } | Error::Scheduling { .. } => 4,
            Error::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
