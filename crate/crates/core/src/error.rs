use thiserror::Error;

/// Errors produced by the perturbation engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Coefficient vectors, grids or bandlimits that do not fit together.
    #[error("sizing error: {0}")]
    Sizing(String),

    /// Arguments outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A mode matrix in the radial solver could not be factorized.
    #[error("solver error: {0}")]
    Solver(String),

    /// The fixed-epsilon oracle iteration did not contract.
    #[error("oracle did not converge after {iterations} iterations (last update {last_update:e}); epsilon too large for the direct solve")]
    RadiusExceeded { iterations: usize, last_update: f64 },

    /// Eigenvalues with imaginary parts above the realness tolerance.
    #[error("spectral validity error: |Im sigma| = {max_imag:e} exceeds {tolerance:e}")]
    SpectralValidity { max_imag: f64, tolerance: f64 },

    /// Eigendecomposition failed or produced a defective basis.
    #[error("eigensolver failure: {0}")]
    Eigen(String),

    /// A gradient was requested for an eigenvalue that is not simple.
    #[error("eigenvalue {index} is degenerate (gap {gap:e}); request the group mean instead")]
    Degeneracy { index: usize, gap: f64 },

    /// The perturbed radius 1 + eps*rho is not positive everywhere.
    #[error("degenerate domain: min(1 + eps*rho) = {min_radius:e}")]
    DegenerateDomain { min_radius: f64 },

    /// A geometric rate cannot be estimated from an all-zero sequence.
    #[error("undefined rate: all norms vanish")]
    UndefinedRate,

    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
