//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("site index {site} out of range (valid: 1..={n_sites})")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator is not hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("state is not normalized (|norm - 1| = {0:.3e})")]
    NotNormalized(f64),

    #[error("density matrix violates {what} (deviation {dev:.3e})")]
    InvalidDensityMatrix { what: &'static str, dev: f64 },

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("spectral analysis error: {0}")]
    Spectral(String),

    #[error("integration step size underflow (dt = {0:.3e})")]
    StepUnderflow(f64),

    #[error("eigendecomposition failed: {0}")]
    Linalg(String),
}

pub type Result<T> = std::result::Result<T, Error>;
