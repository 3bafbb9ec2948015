//! Error type shared by every operation in the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("covariance order m = {m} outside the admissible interval ({lo}, {hi}]")]
    OrderOutOfRange { m: f64, lo: f64, hi: f64 },

    #[error("strength carries a relative mass {mass_fraction:.3e} outside the unit ball (budget {budget:.1e})")]
    SupportViolation { mass_fraction: f64, budget: f64 },

    #[error("nodal strength matrix has eigenvalue {eigenvalue:.6e} below -{tolerance:.3e}")]
    NotNonnegDefinite { eigenvalue: f64, tolerance: f64 },

    #[error("operation requires a validated source spec of the matching kind: {0}")]
    UnvalidatedSpec(&'static str),

    #[error("dimension mismatch: expected d = {expected}, got d = {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Green's kernel evaluated at coincident points")]
    CoincidentPoints,

    #[error("special function argument outside domain: {0}")]
    DomainError(&'static str),

    #[error("near-field target lies inside the source grid box")]
    TargetInsideSupport,

    #[error("Monte Carlo ensemble too small: n = {n}, need at least 2")]
    EnsembleTooSmall { n: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("|gamma| = {gamma_norm:.6} exceeds the direction-synthesis limit {limit:.6}")]
    FrequencyTooHigh { gamma_norm: f64, limit: f64 },

    #[error("theta system is ill-conditioned: det = {det:.6e}")]
    ThetaSingular { det: f64 },

    #[error("Lame constants violate mu > 0, lambda + mu > 0: lambda = {lambda}, mu = {mu}")]
    LameViolation { lambda: f64, mu: f64 },

    #[error("coefficients are not Hermitian: imaginary residue {residue:.3e} of amplitude exceeds budget {budget:.1e}")]
    NonHermitianInput { residue: f64, budget: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
