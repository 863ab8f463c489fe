use thiserror::Error;

/// Coarse grouping used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Input,
    Io,
    Solver,
    Verification,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    InvalidInput(String),
    #[error("{0}")]
    InvalidContour(String),
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    StepFailure(String),
    #[error("{0}")]
    NearPole(String),
    #[error("{0}")]
    ZeroOnContour(String),
    #[error("{0}")]
    NonIntegerWinding(String),
    #[error("{0}")]
    CountMismatch(String),
    #[error("{0}")]
    NewtonDivergence(String),
    #[error("{0}")]
    CrossCheckFailure(String),
    #[error("{0}")]
    PoleOnContour(String),
    #[error("{0}")]
    HeadTooLarge(String),
    #[error("{0}")]
    HeadEscaped(String),
    #[error("{0}")]
    IllConditioned(String),
    #[error("{0}")]
    DegreeViolation(String),
    #[error("{0}")]
    FitResidualTooLarge(String),
    #[error("{0}")]
    VerificationFailure(String),
}

impl Error {
    /// Stable machine-readable name of the failure.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::InvalidContour(_) => "InvalidContour",
            Error::Parse(_) => "ParseError",
            Error::Io(_) => "IoError",
            Error::StepFailure(_) => "StepFailure",
            Error::NearPole(_) => "NearPole",
            Error::ZeroOnContour(_) => "ZeroOnContour",
            Error::NonIntegerWinding(_) => "NonIntegerWinding",
            Error::CountMismatch(_) => "CountMismatch",
            Error::NewtonDivergence(_) => "NewtonDivergence",
            Error::CrossCheckFailure(_) => "CrossCheckFailure",
            Error::PoleOnContour(_) => "PoleOnContour",
            Error::HeadTooLarge(_) => "HeadTooLarge",
            Error::HeadEscaped(_) => "HeadEscaped",
            Error::IllConditioned(_) => "IllConditioned",
            Error::DegreeViolation(_) => "DegreeViolation",
            Error::FitResidualTooLarge(_) => "FitResidualTooLarge",
            Error::VerificationFailure(_) => "VerificationFailure",
        }
    }

    pub fn category(&self) -> Category {
        match self {
            Error::InvalidInput(_) | Error::InvalidContour(_) | Error::Parse(_) => Category::Input,
            Error::Io(_) => Category::Io,
            Error::VerificationFailure(_) => Category::Verification,
            _ => Category::Solver,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
