use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Every failure the estimation pipeline can report.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// No observation falls inside the kernel window of an evaluation point,
    /// even after the maximum number of bandwidth widenings.
    EmptyWindow { t: f64, y: Option<f64> },
    /// Too few points or a rank-deficient local design where no fallback applies.
    DegenerateDesign(String),
    /// The covariance estimate has no positive eigenvalue.
    AllNonpositive,
    /// Requested more directions than the retained rank of the covariance.
    RankTooSmall { requested: usize, retained: usize },
    /// Two objects that must share an evaluation grid do not.
    GridMismatch,
    /// A reduction over Monte Carlo estimates received no estimates.
    EmptyEstimateList,
    /// An index sample has zero variance, so a correlation is undefined.
    DegenerateVariance,
    /// A configuration value is outside its valid range.
    ConfigInvalid { field: &'static str, reason: String },
    /// Input data violates a dataset invariant.
    InvalidData(String),
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            field,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyWindow { .. } => "EmptyWindow",
            Error::DegenerateDesign(_) => "DegenerateDesign",
            Error::AllNonpositive => "AllNonpositive",
            Error::RankTooSmall { .. } => "RankTooSmall",
            Error::GridMismatch => "GridMismatch",
            Error::EmptyEstimateList => "EmptyEstimateList",
            Error::DegenerateVariance => "DegenerateVariance",
            Error::ConfigInvalid { .. } => "ConfigInvalid",
            Error::InvalidData(_) => "InvalidData",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyWindow { t, y: None } => {
                write!(f, "no observations in the kernel window at t = {t}")
            }
            Error::EmptyWindow { t, y: Some(y) } => {
                write!(f, "no observations in the kernel window at (t, y) = ({t}, {y})")
            }
            Error::DegenerateDesign(msg) => write!(f, "degenerate local design: {msg}"),
            Error::AllNonpositive => f.write_str("covariance estimate has no positive eigenvalues"),
            Error::RankTooSmall { requested, retained } => write!(
                f,
                "requested {requested} directions but only {retained} covariance components were retained"
            ),
            Error::GridMismatch => f.write_str("functions are defined on different grids"),
            Error::EmptyEstimateList => f.write_str("no estimates to summarize"),
            Error::DegenerateVariance => f.write_str("index sample has zero variance"),
            Error::ConfigInvalid { field, reason } => write!(f, "invalid `{field}`: {reason}"),
            Error::InvalidData(msg) => write!(f, "invalid data: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
