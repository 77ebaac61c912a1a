use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The relative belief ratio is undefined because the prior mass is zero.
    #[error("relative belief undefined at {0}: prior mass is zero")]
    UndefinedEvidence(String),

    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    /// The elicitation constraints cannot be met.
    #[error("infeasible elicitation: {0}")]
    Infeasible(String),

    #[error("matrix error: {0}")]
    Matrix(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("root finding failed: {0}")]
    NoConvergence(String),

    #[error("table cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
