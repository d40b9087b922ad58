use thiserror::Error;

/// Errors raised across the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("degenerate task: coefficient vector has zero norm")]
    DegenerateTask,
    #[error("action outside the unit ball (norm {norm})")]
    ActionOutsideSet { norm: f64 },
    #[error("invalid window length {window} for sequence of length {len}")]
    InvalidWindow { window: usize, len: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("rank-deficient design: {0}")]
    RankDeficient(String),
    #[error("rank-deficient accumulator: sigma_r = {sigma_r:e}")]
    RankDeficientAccumulator { sigma_r: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid probe count: n_od = {n_od} exceeds d - r = {available}")]
    InvalidProbeCount { n_od: usize, available: usize },
    #[error("task budget exhausted after {played} rounds")]
    BudgetExhausted { played: usize },
    #[error("diversity check failed after {attempts} attempts")]
    DiversityNotMet { attempts: usize },
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("inconsistent observations: recovered {0:?} is not a sorting rule")]
    InconsistentObservations([f64; 3]),
    #[error("empty trace")]
    EmptyTrace,
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Short stable code written to the `failure_code` column.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidDimension(_) => "invalid-dimension",
            Error::InvalidBounds(_) => "invalid-bounds",
            Error::DegenerateTask => "degenerate-task",
            Error::ActionOutsideSet { .. } => "action-outside-set",
            Error::InvalidWindow { .. } => "invalid-window",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::RankDeficient(_) => "rank-deficient",
            Error::RankDeficientAccumulator { .. } => "rank-deficient-accumulator",
            Error::Config(_) => "config",
            Error::InvalidProbeCount { .. } => "invalid-probe-count",
            Error::BudgetExhausted { .. } => "budget-exhausted",
            Error::DiversityNotMet { .. } => "diversity-not-met",
            Error::OutOfRange(_) => "out-of-range",
            Error::InconsistentObservations(_) => "inconsistent-observations",
            Error::EmptyTrace => "empty-trace",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}
