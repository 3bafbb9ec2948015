//! A numerical laboratory for inverse random source problems.
//!
//! The crate forward-simulates far-field patterns of stochastic
//! polyharmonic, electromagnetic, and elastic wave equations driven by
//! microlocally isotropic Gaussian random sources, estimates far-field
//! correlations at a single frequency, and recovers the source strength
//! from them.
//!
//! Pipeline: [`params`] holds models, grids, and strengths; [`sampler`]
//! draws source realizations; [`farfield`] maps realizations to far-field
//! patterns; [`correlation`] estimates E[u(xhat) u(yhat)] (no conjugation)
//! or evaluates its analytic r = 0 form; [`reconstruction`] inverts the
//! correlation back to Fourier coefficients of the strength and
//! synthesizes it on a grid. [`green`] provides the polyharmonic kernels
//! and a near-field solver used to validate the far-field asymptotics.

pub mod correlation;
pub mod errors;
pub mod farfield;
pub mod green;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod par;
pub mod params;
pub mod reconstruction;
pub mod rng;
pub mod sampler;
pub mod sigma_hat;
pub mod special;

pub use errors::{Error, Result};
pub use grid::SpatialGrid;
pub use params::{
    gaussian_bump_strength, matrix_bump_strength, validate_source, CheckedSourceSpec, SourceSpec,
    StrengthField, WaveModel,
};
pub use sampler::{leray_project, sample_scalar, sample_vector, FieldRealization};
