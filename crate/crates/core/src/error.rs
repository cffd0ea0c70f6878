use thiserror::Error;

/// Failure modes shared by every estimator in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A coordinate oracle could not resolve the requested index.
    #[error("oracle exhausted at index {index}: {reason}")]
    OracleExhausted { index: i64, reason: String },

    /// The orbit of an interval endpoint came within working precision of the query.
    #[error("boundary ambiguity at index {index}: phase within {epsilon:e} of an arc endpoint")]
    BoundaryAmbiguity { index: i64, epsilon: f64 },

    #[error("sampler exhausted: {0}")]
    SamplerExhausted(String),

    #[error("not a Sturmian point: {0}")]
    NotASturmianPoint(String),

    #[error("point is not in the Toeplitz family: {0}")]
    NotInFamily(String),

    #[error("factor resolution {resolution:e} is too coarse for tolerance {tolerance:e}")]
    ResolutionTooCoarse { resolution: f64, tolerance: f64 },

    #[error("invalid full group element: {0}")]
    InvalidElement(String),

    #[error("mismatched operands: {0}")]
    Mismatch(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn exhausted(index: i64, reason: impl Into<String>) -> Self {
        Error::OracleExhausted {
            index,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
