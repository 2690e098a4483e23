use thiserror::Error;

/// Failures that stop a run before any artifact is written.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("config key `{key}`: {msg}")]
    Invalid { key: String, msg: String },

    #[error("reading {path}: {source}")]
    Read { path: String, source: std::io::Error },

    #[error("writing artifacts: {0}")]
    Write(#[from] std::io::Error),

    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("writing JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Invalid { .. } | CliError::Read { .. } => 2,
            CliError::Write(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}

/// Outcome of a pipeline that ran to completion or stopped on a library error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    /// Parameters accepted by the parser but rejected by the library.
    InvalidParameters,
    Precondition,
    NonContraction,
    Blowup,
    AccuracyCeiling,
}

impl RunStatus {
    pub fn exit_code(self) -> u8 {
        match self {
            RunStatus::Ok => 0,
            RunStatus::InvalidParameters => 2,
            RunStatus::Precondition => 3,
            RunStatus::NonContraction => 4,
            RunStatus::Blowup => 5,
            RunStatus::AccuracyCeiling => 6,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::InvalidParameters => "invalid-parameters",
            RunStatus::Precondition => "precondition-failed",
            RunStatus::NonContraction => "non-contraction",
            RunStatus::Blowup => "blowup",
            RunStatus::AccuracyCeiling => "accuracy-ceiling",
        }
    }

    pub fn of_error(e: &fracevo::Error) -> Self {
        use fracevo::Error as E;
        match e {
            E::Precondition { .. } => RunStatus::Precondition,
            E::NonContraction { .. } | E::WindowTooLong { .. } => RunStatus::NonContraction,
            E::AccuracyCeiling(_)
            | E::SeriesNotConverged { .. }
            | E::VolterraNotConverged { .. }
            | E::QuadratureInvariant(_)
            | E::FitRejected(_) => RunStatus::AccuracyCeiling,
            E::Domain(_)
            | E::Ellipticity { .. }
            | E::NotSymmetrizable { .. }
            | E::SingularResolvent { .. }
            | E::UnsupportedNormPair { .. } => RunStatus::InvalidParameters,
        }
    }
}
