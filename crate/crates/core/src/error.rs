use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("monodromy integration failed at x = {x} for E = {energy}: step size underflow")]
    IntegrationFailure { x: f64, energy: Complex64 },

    #[error("energy {energy} is outside the scanned range [{lo}, {hi}] (|Im E| must stay below 1)")]
    OutOfRange { energy: Complex64, lo: f64, hi: f64 },

    #[error("quasi-momentum derivative is singular at E = {energy} (|sin k| = {sin_k:e}, band edge)")]
    SingularDerivative { energy: Complex64, sin_k: f64 },

    #[error("profile evaluated within {distance:e} of a singularity at {singularity}")]
    NearSingularity { distance: f64, singularity: Complex64 },

    #[error("window endpoint {zeta} is a critical point of W (|W'| = {w_prime:e})")]
    CriticalEndpoint { zeta: f64, w_prime: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("branch point {zeta} lies on the search box boundary; enlarge the box")]
    BoundaryCollision { zeta: Complex64 },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("window does not fit in the oracle box: {0}")]
    WindowDoesNotFit(String),

    #[error("eigensolver failed for a matrix of size {size}: {reason}")]
    EigenSolver { size: usize, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Configuration problems are reported with a different exit status by the CLI.
    pub fn is_configuration(&self) -> bool {
        matches!(self, Error::Config(_) | Error::WindowDoesNotFit(_))
    }
}
