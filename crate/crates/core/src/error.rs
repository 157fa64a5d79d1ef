use thiserror::Error;

/// Errors raised by the numerical kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The dense eigensolver did not reach the residual bound.
    #[error("eigensolver failed to converge (worst residual {worst_residual:.3e})")]
    NoConvergence { worst_residual: f64 },

    /// A linear system could not be solved.
    #[error("singular linear system: {0}")]
    Singular(String),

    /// A state could not be assigned to a single momentum sector.
    #[error("classification failed: {0}")]
    Classification(String),

    /// The single-excitation basis cannot be inverted for a biorthogonal expansion.
    #[error("defective basis: {0}")]
    DefectiveBasis(String),

    /// Construction of a composite state failed a structural check.
    #[error("construction failed: {0}")]
    Construction(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
