use thiserror::Error;

/// Errors raised by the solver, the monitors and the norm machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("g is singular below u = {cutoff} (got u = {u})")]
    Singularity { u: f64, cutoff: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no crossing found for alpha up to {alpha_max}")]
    NoCrossingFound { alpha_max: f64 },

    #[error("no stall witness found above b = {b}")]
    NoStallFound { b: f64 },

    #[error("bracket lost: {0}")]
    BracketLost(String),

    #[error("F has no root above b in the searched range (up to {searched_to})")]
    NoRoot { searched_to: f64 },

    #[error("profile is not strictly decreasing: {0}")]
    NotMonotone(String),

    #[error("empty overlap between the two profiles")]
    EmptyOverlap,

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("singular integrand: {0}")]
    SingularIntegrand(String),

    #[error("unnormalizable tail: {0}")]
    UnnormalizableTail(String),

    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),
}

impl Error {
    /// Stable short name written into result files.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Domain(_) => "Domain",
            Error::Singularity { .. } => "Singularity",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::NoCrossingFound { .. } => "NoCrossingFound",
            Error::NoStallFound { .. } => "NoStallFound",
            Error::BracketLost(_) => "BracketLost",
            Error::NoRoot { .. } => "NoRoot",
            Error::NotMonotone(_) => "NotMonotone",
            Error::EmptyOverlap => "EmptyOverlap",
            Error::Quadrature(_) => "Quadrature",
            Error::SingularIntegrand(_) => "SingularIntegrand",
            Error::UnnormalizableTail(_) => "UnnormalizableTail",
            Error::Inadmissible(_) => "Inadmissible",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
