use thiserror::Error;

/// Errors produced by the operator, solver and diagnostic routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Domain(String),

    #[error("kernel is singular at the origin")]
    Singularity,

    #[error("surface integral diverges for kernel order s = {0} (need s > 1)")]
    NonIntegrable(f64),

    #[error("degenerate resolution: {0}")]
    Resolution(String),

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("operands live on different meshes")]
    MeshMismatch,

    #[error("matrix is singular to working precision (smallest singular value {sigma_min:.3e})")]
    Singular { sigma_min: f64 },

    #[error("iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("point at distance {dist:.3e} is too close to the surface (limit {limit:.3e})")]
    TooClose { dist: f64, limit: f64 },

    #[error("density has zero total mass; the leading far-field term vanishes")]
    ZeroMass,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("band limit {lmax} exceeds what the grid resolves ({nlat}x{nlon})")]
    Aliasing { lmax: usize, nlat: usize, nlon: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
