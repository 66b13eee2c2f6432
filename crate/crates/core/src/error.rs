use thiserror::Error;

/// Errors surfaced by the engine.  Anything that would silently produce a
/// wrong group or morphism is rejected at construction time instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not compatible with the relations: {0}")]
    IncompatibleWithRelations(String),

    #[error("morphism is not a monomorphism")]
    NotMono,

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("rows do not form a short exact sequence: {0}")]
    NonExact(String),

    #[error("diagram does not commute: {0}")]
    NonCommutative(String),

    #[error("{0} is not a prime")]
    NotPrime(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
