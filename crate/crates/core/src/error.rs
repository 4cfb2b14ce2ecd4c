use thiserror::Error;

/// Errors raised by the estimation, selection and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sample has no observations")]
    EmptySample,
    #[error("all weights are zero")]
    ZeroWeight,
    #[error("weight {index} is negative or not finite")]
    NegativeWeight { index: usize },
    #[error("observation {index} is not finite")]
    NonFiniteValue { index: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("operation requires the Gaussian kernel")]
    UnsupportedKernel,
    #[error("every observation is censored")]
    AllCensored,
    #[error("no uncensored observations")]
    NoEvents,
    #[error("biasing function is not positive at {0}")]
    ZeroBias(f64),
    #[error("biasing probability {0} outside [0, 1]")]
    BiasOutOfRange(f64),
    #[error("censored observation {index} has no recipient for its weight")]
    NoTarget { index: usize },
    #[error("sample scale is degenerate (zero spread)")]
    DegenerateScale,
    #[error("censoring survival is zero at {0}")]
    ZeroSurvival(f64),
    #[error("pilot density is zero at observation {index}")]
    ZeroPilot { index: usize },
    #[error("observation {index} is negative")]
    NegativeData { index: usize },
    #[error("grid has {0} points, need at least 3")]
    GridTooSmall(usize),
    #[error("grid must be strictly increasing with at least 2 points")]
    InvalidGrid,
    #[error("could not calibrate censoring to rate {0}")]
    CalibrationFailed(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    /// Variant name, used by the CLI when reporting failures.
    pub fn name(&self) -> &'static str {
        match self {
            Error::EmptySample => "EmptySample",
            Error::ZeroWeight => "ZeroWeight",
            Error::NegativeWeight { .. } => "NegativeWeight",
            Error::NonFiniteValue { .. } => "NonFiniteValue",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::NonPositiveBandwidth(_) => "NonPositiveBandwidth",
            Error::UnsupportedKernel => "UnsupportedKernel",
            Error::AllCensored => "AllCensored",
            Error::NoEvents => "NoEvents",
            Error::ZeroBias(_) => "ZeroBias",
            Error::BiasOutOfRange(_) => "BiasOutOfRange",
            Error::NoTarget { .. } => "NoTarget",
            Error::DegenerateScale => "DegenerateScale",
            Error::ZeroSurvival(_) => "ZeroSurvival",
            Error::ZeroPilot { .. } => "ZeroPilot",
            Error::NegativeData { .. } => "NegativeData",
            Error::GridTooSmall(_) => "GridTooSmall",
            Error::InvalidGrid => "InvalidGrid",
            Error::CalibrationFailed(_) => "CalibrationFailed",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::Parse { .. } => "ParseError",
        }
    }

    /// True for input-format problems (as opposed to numerical failures).
    pub fn is_parse(&self) -> bool {
        matches!(self, Error::Parse { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
