use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the library. Every malformed input or numerical failure
/// maps to exactly one variant; [`Error::code`] gives a stable machine-readable
/// name for it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time at row {row} is not strictly positive ({value})")]
    NonPositiveTime { row: usize, value: f64 },

    #[error("status at row {row} must be 0 or 1 (got {value})")]
    BadIndicator { row: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no events observed; the likelihood is degenerate")]
    NoEvents,

    #[error("column {column} of {matrix} has zero variance")]
    ConstantColumnNotIntercept { matrix: &'static str, column: usize },

    #[error("first column of {0} must be identically 1")]
    MissingIntercept(&'static str),

    #[error("non-finite value in {what} at row {row}")]
    NonFiniteInput { what: &'static str, row: usize },

    #[error("non-finite result while evaluating {0}")]
    NonFiniteResult(&'static str),

    #[error("expected {expected} tuning scalar(s), got {got}")]
    WrongScalarCount { expected: usize, got: usize },

    #[error("adaptive penalty requires adaptive weights")]
    MissingAdaptiveWeights,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("linear system is singular even after ridge escalation")]
    SingularSystem,

    #[error("Newton iterations did not converge within {0} iterations")]
    DidNotConverge(usize),

    #[error("censoring calibration failed: target {target} unreachable in [{lo}, {hi}]")]
    CalibrationFailed { target: f64, lo: f64, hi: f64 },

    #[error("need at least 2 usable points for the log-log fit, got {0}")]
    TooFewPoints(usize),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonPositiveTime { .. } => "NonPositiveTime",
            Error::BadIndicator { .. } => "BadIndicator",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NoEvents => "NoEvents",
            Error::ConstantColumnNotIntercept { .. } => "ConstantColumnNotIntercept",
            Error::MissingIntercept(_) => "MissingIntercept",
            Error::NonFiniteInput { .. } => "NonFiniteInput",
            Error::NonFiniteResult(_) => "NonFiniteResult",
            Error::WrongScalarCount { .. } => "WrongScalarCount",
            Error::MissingAdaptiveWeights => "MissingAdaptiveWeights",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::SingularSystem => "SingularSystem",
            Error::DidNotConverge(_) => "DidNotConverge",
            Error::CalibrationFailed { .. } => "CalibrationFailed",
            Error::TooFewPoints(_) => "TooFewPoints",
        }
    }

    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteResult(_)
                | Error::SingularSystem
                | Error::DidNotConverge(_)
                | Error::CalibrationFailed { .. }
                | Error::TooFewPoints(_)
        )
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Error::InvalidConfig(_) | Error::WrongScalarCount { .. } | Error::MissingAdaptiveWeights)
    }
}
