use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument {value} lies outside the tabulated domain [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("quadrature did not converge ({context}): partial value {value}, error bound {error}")]
    Quadrature {
        context: String,
        value: f64,
        error: f64,
    },

    #[error("cluster is not summable: running sum exceeded {cap}")]
    NotSummable { cap: f64 },

    #[error("cluster point {value} has modulus larger than 1")]
    ClusterBound { value: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed table: {0}")]
    Table(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
