use thiserror::Error;

/// Errors raised by the decision engine and simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{field}`: {message}")]
    InvalidParameter { field: String, message: String },

    #[error("invalid dose grid: {0}")]
    InvalidGrid(String),

    #[error("no dose has observed patients")]
    EmptyObservedSet,

    #[error("no patients treated at the current dose level {0}")]
    NoDataAtCurrent(usize),

    #[error("dose {0} is already on the working grid")]
    DuplicateDose(f64),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("scenario does not match the design: {0}")]
    ScenarioMismatch(String),

    #[error("scenario has no defined true MTD")]
    UndefinedMtd,

    #[error("rejection budget of {0} attempts exhausted")]
    RejectionBudgetExhausted(usize),
}

impl Error {
    pub(crate) fn param(field: &str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
