use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// An element or set lies outside the relevant ground set.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The instance admits no feasible object (e.g. no common base).
    #[error("infeasible instance: {0}")]
    Infeasible(String),
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
    #[error("malformed input: {0}")]
    Schema(String),
    #[error("axiom violated: {0}")]
    Axiom(String),
    /// A postcondition the algorithm guarantees did not hold.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
