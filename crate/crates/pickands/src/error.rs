use thiserror::Error;

/// Errors produced by samplers, estimators and validators.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an API contract (mismatched grids, inadmissible
    /// parameter combinations, too few replicates, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A quantity was requested outside its domain of definition
    /// (tabulated function past its last knot, Laplace exponent past a pole).
    #[error("domain error: {0}")]
    Domain(String),

    /// A spec failed validation at construction time.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// The exponential tilt of a Lévy spec would leave the sampleable family.
    #[error("unsupported spec: {0}")]
    Unsupported(String),

    /// A Lévy spec does not satisfy the moment conditions required by the
    /// requested estimation route.
    #[error("moment condition failed: {0}")]
    MomentCondition(String),

    /// Numerical failure that persists after the configured fallbacks
    /// (e.g. dense factorization still failing after jitter).
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
