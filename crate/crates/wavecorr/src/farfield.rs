//! Forward maps from a source realization to far-field patterns for the
//! polyharmonic, electromagnetic, and elastic models.
//!
//! The global sign convention is e^{-i k xhat . y} inside the radiating
//! integral; every correlation and recovery formula in the crate relies on
//! it.

use num_complex::Complex64;

use crate::errors::{Error, Result};
use crate::linalg::Vec3;
use crate::rng::CounterRng;
use crate::sampler::FieldRealization;
use crate::sigma_hat::grid_fourier_scalar;

/// Far-field prefactor beta_d: e^{i pi/4} / sqrt(8 pi) in 2-d, 1/(4 pi) in 3-d.
pub fn beta_d(d: usize) -> Complex64 {
    match d {
        2 => Complex64::from_polar(
            1.0 / (8.0 * std::f64::consts::PI).sqrt(),
            std::f64::consts::FRAC_PI_4,
        ),
        3 => Complex64::new(1.0 / (4.0 * std::f64::consts::PI), 0.0),
        _ => unreachable!("d is 2 or 3"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelTag {
    Polyharmonic,
    Electromagnetic,
    ElasticP,
    ElasticS,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FarFieldValue {
    Scalar(Complex64),
    Vector([Complex64; 3]),
}

/// Complex far-field value at one unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarFieldSample {
    pub direction: Vec3,
    pub value: FarFieldValue,
    pub k: f64,
    pub model: ModelTag,
}

impl FarFieldSample {
    pub fn scalar_value(&self) -> Result<Complex64> {
        match self.value {
            FarFieldValue::Scalar(v) => Ok(v),
            FarFieldValue::Vector(_) => Err(Error::UnvalidatedSpec("scalar far field required")),
        }
    }

    pub fn vector_value(&self) -> Result<[Complex64; 3]> {
        match self.value {
            FarFieldValue::Vector(v) => Ok(v),
            FarFieldValue::Scalar(_) => Err(Error::UnvalidatedSpec("vector far field required")),
        }
    }
}

/// Compressional and shear wavenumbers of the Lame system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticWavenumbers {
    pub k: f64,
    pub c_p: f64,
    pub c_s: f64,
    pub k_p: f64,
    pub k_s: f64,
}

impl ElasticWavenumbers {
    pub fn new(k: f64, lambda: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && lambda + mu > 0.0) {
            return Err(Error::LameViolation { lambda, mu });
        }
        if !(k > 0.0) {
            return Err(Error::InvalidInput(format!("wavenumber must be positive, got {k}")));
        }
        let c_p = (lambda + 2.0 * mu).powf(-0.5);
        let c_s = mu.powf(-0.5);
        debug_assert!(c_p < c_s);
        Ok(Self {
            k,
            c_p,
            c_s,
            k_p: c_p * k,
            k_s: c_s * k,
        })
    }
}

/// Oscillatory quadrature integral e^{-i w.y} f(y) dy over the grid by
/// direct summation; exact up to the grid quadrature, no gridding
/// approximation.
pub fn fourier_at(f: &FieldRealization, w: &Vec3) -> Result<Complex64> {
    let values = f.scalar_values()?;
    Ok(grid_fourier_scalar(&f.grid, values, w))
}

/// Componentwise transform of a vector realization.
pub fn fourier_at_vector(f: &FieldRealization, w: &Vec3) -> Result<[Complex64; 3]> {
    let comps = f.vector_values()?;
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for (c, comp) in comps.iter().enumerate() {
        out[c] = grid_fourier_scalar(&f.grid, comp, w);
    }
    Ok(out)
}

/// Polyharmonic far-field pattern
/// u_inf(xhat) = -(beta_d / n) k^{(d+1-4n)/2} integral e^{-ik xhat.y} f(y) dy.
pub fn poly_farfield(
    f: &FieldRealization,
    k: f64,
    n: usize,
    directions: &[Vec3],
) -> Result<Vec<FarFieldSample>> {
    let d = f.grid.dim();
    if !(k > 0.0) {
        return Err(Error::InvalidInput(format!("wavenumber must be positive, got {k}")));
    }
    let prefactor = -(beta_d(d) / n as f64) * k.powf((d as f64 + 1.0 - 4.0 * n as f64) / 2.0);
    directions
        .iter()
        .map(|xhat| {
            let w = [k * xhat[0], k * xhat[1], k * xhat[2]];
            let value = prefactor * fourier_at(f, &w)?;
            Ok(FarFieldSample {
                direction: *xhat,
                value: FarFieldValue::Scalar(value),
                k,
                model: ModelTag::Polyharmonic,
            })
        })
        .collect()
}

/// Electric far-field pattern E_inf(xhat) = i k beta_3 integral e^{-ik xhat.y} f(y) dy.
pub fn em_farfield(
    f: &FieldRealization,
    k: f64,
    directions: &[Vec3],
) -> Result<Vec<FarFieldSample>> {
    if f.grid.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: f.grid.dim(),
        });
    }
    let prefactor = Complex64::new(0.0, k) * beta_d(3);
    directions
        .iter()
        .map(|xhat| {
            let w = [k * xhat[0], k * xhat[1], k * xhat[2]];
            let q = fourier_at_vector(f, &w)?;
            let value = [prefactor * q[0], prefactor * q[1], prefactor * q[2]];
            Ok(FarFieldSample {
                direction: *xhat,
                value: FarFieldValue::Vector(value),
                k,
                model: ModelTag::Electromagnetic,
            })
        })
        .collect()
}

/// Kupradze far-field pair: the compressional pattern is the rank-one
/// projection of the transform at k_p, the shear pattern the orthogonal
/// projection at k_s.
pub fn elastic_farfield(
    f: &FieldRealization,
    k: f64,
    lambda: f64,
    mu: f64,
    directions: &[Vec3],
) -> Result<Vec<(FarFieldSample, FarFieldSample)>> {
    let d = f.grid.dim();
    let waves = ElasticWavenumbers::new(k, lambda, mu)?;
    let common = beta_d(d) * k.powf((d as f64 - 3.0) / 2.0);
    let pref_p = -common * waves.c_p.powf((d as f64 + 2.0) / 2.0);
    let pref_s = -common * waves.c_s.powf((d as f64 + 2.0) / 2.0);
    directions
        .iter()
        .map(|xhat| {
            let wp = [waves.k_p * xhat[0], waves.k_p * xhat[1], waves.k_p * xhat[2]];
            let ws = [waves.k_s * xhat[0], waves.k_s * xhat[1], waves.k_s * xhat[2]];
            let qp = fourier_at_vector(f, &wp)?;
            let qs = fourier_at_vector(f, &ws)?;
            let radial = (0..d).map(|i| qp[i] * xhat[i]).sum::<Complex64>();
            let mut vp = [Complex64::new(0.0, 0.0); 3];
            let mut vs = [Complex64::new(0.0, 0.0); 3];
            let radial_s = (0..d).map(|i| qs[i] * xhat[i]).sum::<Complex64>();
            for i in 0..d {
                vp[i] = pref_p * xhat[i] * radial;
                vs[i] = pref_s * (qs[i] - xhat[i] * radial_s);
            }
            Ok((
                FarFieldSample {
                    direction: *xhat,
                    value: FarFieldValue::Vector(vp),
                    k,
                    model: ModelTag::ElasticP,
                },
                FarFieldSample {
                    direction: *xhat,
                    value: FarFieldValue::Vector(vs),
                    k,
                    model: ModelTag::ElasticS,
                },
            ))
        })
        .collect()
}

/// Deterministic direction set: uniform angles in 2-d, a Fibonacci-sphere
/// lattice in 3-d.
pub fn direction_grid(d: usize, count: usize) -> Vec<Vec3> {
    assert!(count > 0);
    match d {
        2 => (0..count)
            .map(|j| {
                let phi = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
                [phi.cos(), phi.sin(), 0.0]
            })
            .collect(),
        3 => {
            let golden_angle = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
            (0..count)
                .map(|j| {
                    let z = 1.0 - 2.0 * (j as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden_angle * j as f64;
                    [r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => unreachable!("d is 2 or 3"),
    }
}

/// Reproducible pseudo-random unit directions, for probe sets.
pub fn random_directions(d: usize, count: usize, seed: u64) -> Vec<Vec3> {
    let rng = CounterRng::new(seed, 101);
    (0..count)
        .map(|j| {
            let c = 2 * j as u64;
            match d {
                2 => {
                    let phi = rng.uniform_in(c, 0.0, 2.0 * std::f64::consts::PI);
                    [phi.cos(), phi.sin(), 0.0]
                }
                _ => {
                    let z = rng.uniform_in(c, -1.0, 1.0);
                    let phi = rng.uniform_in(c + 1, 0.0, 2.0 * std::f64::consts::PI);
                    let r = (1.0 - z * z).sqrt();
                    [r * phi.cos(), r * phi.sin(), z]
                }
            }
        })
        .collect()
}
