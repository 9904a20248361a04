use thiserror::Error;

/// Errors produced by the numerical laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    /// A factorization or iterative routine did not converge.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Operand dimensions are incompatible.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A type specification violates one of its structural invariants.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    /// The requested construction does not exist for this input.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A randomized search exhausted its budget.
    #[error("search failed: {0}")]
    SearchFailed(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Shape(msg.into()))
}

pub(crate) fn domain_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Domain(msg.into()))
}
