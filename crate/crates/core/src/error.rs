use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown small area `{0}`")]
    UnknownSmallArea(String),
    #[error("unknown large area `{0}`")]
    UnknownLargeArea(String),
    #[error("date {0} is not a tick of the calendar")]
    UnknownDate(chrono::NaiveDate),
    #[error("category `{value}` is not in the frozen {vocabulary} vocabulary")]
    UnseenCategory { vocabulary: &'static str, value: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid hierarchy: {0}")]
    InvalidHierarchy(String),
    #[error("invalid calendar: {0}")]
    InvalidCalendar(String),
    #[error("panel failed validation with {} violation(s); first: {}", .0.len(), .0[0])]
    InvalidPanel(Vec<crate::regions::Violation>),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("no prediction for child area `{0}`")]
    MissingPrediction(String),
    #[error("panel has no labeled periods to train or score on")]
    NoLabels,
    #[error("non-finite loss at epoch {epoch}, sample {sample}")]
    NonFiniteLoss { epoch: usize, sample: String },
    #[error("insufficient history: {0}")]
    InsufficientHistory(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("undefined metric: {0}")]
    Undefined(String),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Validation failures map to CLI exit code 1, everything else to 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::UnknownSmallArea(_)
                | Error::UnknownLargeArea(_)
                | Error::UnknownDate(_)
                | Error::UnseenCategory { .. }
                | Error::InvalidArgument(_)
                | Error::InvalidHierarchy(_)
                | Error::InvalidCalendar(_)
                | Error::InvalidPanel(_)
                | Error::Parse { .. }
                | Error::Csv(_)
        )
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
