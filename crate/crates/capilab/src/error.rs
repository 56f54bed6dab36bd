//! Crate-wide error type and result alias.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Domain parameters outside the admissible range (radius, contact angle,
    /// star-shapedness, perturbation amplitude).
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// Mesh generation failed a precondition or a quality gate.
    #[error("mesh: {0}")]
    Mesh(String),

    /// Linear solver did not reach the requested residual.
    #[error("solver: {0}")]
    Solver(String),

    /// A mathematical hypothesis required by a functional does not hold on
    /// this domain (for example positive mean curvature).
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// Quadrature orders failed to agree to the requested tolerance.
    #[error("quadrature: {0}")]
    Quadrature(String),

    /// Bad command line or config file input.
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to: usage and config
    /// problems exit 2, everything else exits 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidDomain(_) => 2,
            _ => 1,
        }
    }
}
