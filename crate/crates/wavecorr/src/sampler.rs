//! Spectral synthesis of scalar and vector GMIG random fields.
//!
//! A realization is f = sqrt(sigma) * f_tilde, where f_tilde is a stationary
//! centered Gaussian field on the periodic box with spectral density
//! |xi|^{-m}. Each Fourier mode xi != 0 carries an independent standard
//! complex Gaussian (Hermitian-paired so the field is real), weighted by
//! w(xi) = L^{-d/2} |xi|^{-m/2}.
//!
//! The normalization is fixed by matching the lattice covariance to the
//! continuum kernel: the mode sum sum_xi L^{-d} |xi|^{-m} e^{i xi.(x-y)} is
//! the Riemann sum of (2pi)^{-d} integral |xi|^{-m} e^{i xi.(x-y)} dxi on
//! the lattice with cell (2pi/L)^d, i.e. the weights carry the (2pi)^{-d/2}
//! factor through L^{-d/2} = (2pi)^{-d/2} (2pi/L)^{d/2}. The zero mode is
//! set to zero: |xi|^{-m/2} is singular there for m > 0, and dropping it
//! biases only frequencies within one spectral cell of the origin.
//!
//! Mode-level draws come from a counter-based generator keyed by
//! (seed, component, canonical mode index), so realizations are bit-identical
//! regardless of loop order or thread count.

use num_complex::Complex64;

use crate::errors::{Error, Result};
use crate::grid::{GridFft, SpatialGrid};
use crate::linalg::{norm, SymMat};
use crate::params::{eigenvalue_tolerance, CheckedSourceSpec};
use crate::rng::CounterRng;

/// One grid sample of the random source.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRealization {
    pub grid: SpatialGrid,
    pub values: FieldValues,
    pub seed: u64,
    /// Covariance order used to synthesize the field; 0 for deterministic
    /// test fields built directly from values.
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldValues {
    Scalar(Vec<f64>),
    /// One vector component per entry, each of length grid.len().
    Vector(Vec<Vec<f64>>),
}

impl FieldRealization {
    /// Wraps explicit nodal values as a deterministic "realization"; used for
    /// planted smooth sources in the asymptotics checks.
    pub fn from_scalar_values(grid: SpatialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} nodal values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid,
            values: FieldValues::Scalar(values),
            seed: 0,
            m: 0.0,
        })
    }

    pub fn from_vector_values(grid: SpatialGrid, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.dim() || components.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: components.len(),
            });
        }
        Ok(Self {
            grid,
            values: FieldValues::Vector(components),
            seed: 0,
            m: 0.0,
        })
    }

    pub fn scalar_values(&self) -> Result<&[f64]> {
        match &self.values {
            FieldValues::Scalar(v) => Ok(v),
            FieldValues::Vector(_) => Err(Error::UnvalidatedSpec("scalar realization required")),
        }
    }

    pub fn vector_values(&self) -> Result<&[Vec<f64>]> {
        match &self.values {
            FieldValues::Vector(v) => Ok(v),
            FieldValues::Scalar(_) => Err(Error::UnvalidatedSpec("vector realization required")),
        }
    }

    /// Grid dual pairing <f, phi> = h^d sum_j f_j phi_j for scalar fields.
    pub fn pair_with(&self, test_values: &[f64]) -> Result<f64> {
        let v = self.scalar_values()?;
        if test_values.len() != v.len() {
            return Err(Error::InvalidInput("test function length mismatch".into()));
        }
        let w = self.grid.cell_volume();
        Ok(w * v.iter().zip(test_values).map(|(a, b)| a * b).sum::<f64>())
    }
}

/// Spectral weights w(xi) for one grid; zero at the zero mode.
fn mode_weights(grid: &SpatialGrid, m: f64) -> Vec<f64> {
    let l = grid.box_width();
    let amp = l.powf(-(grid.dim() as f64) / 2.0);
    (0..grid.len())
        .map(|idx| {
            let xi = grid.mode(idx);
            let r = norm(&xi);
            if r == 0.0 {
                0.0
            } else {
                amp * r.powf(-m / 2.0)
            }
        })
        .collect()
}

/// Fills a Hermitian-paired array of standard complex Gaussians and returns
/// the stationary field f_tilde on the grid nodes.
fn synthesize_stationary(
    fft: &GridFft,
    weights: &[f64],
    rng: &CounterRng,
) -> Vec<f64> {
    let grid = *fft.grid();
    let len = grid.len();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut modes = vec![Complex64::new(0.0, 0.0); len];
    for idx in 0..len {
        let partner = grid.conjugate_index(idx);
        if idx > partner {
            continue;
        }
        let (z0, z1) = rng.normal_pair(idx as u64);
        let w = weights[idx] * grid.center_sign(idx);
        if idx == partner {
            // Self-conjugate bin: real Gaussian keeps E[g^2] = 1.
            modes[idx] = Complex64::new(w * z0, 0.0);
        } else {
            let g = Complex64::new(z0 * inv_sqrt2, z1 * inv_sqrt2);
            modes[idx] = w * g;
            modes[partner] = weights[partner] * grid.center_sign(partner) * g.conj();
        }
    }
    fft.inverse(&mut modes);
    modes.iter().map(|z| z.re).collect()
}

/// Reusable scalar sampler: precomputes sqrt(sigma), the spectral weights,
/// and the FFT plan once per spec.
pub struct ScalarSampler {
    grid: SpatialGrid,
    fft: GridFft,
    sqrt_sigma: Vec<f64>,
    weights: Vec<f64>,
    m: f64,
}

impl ScalarSampler {
    pub fn new(spec: &CheckedSourceSpec) -> Result<Self> {
        let sigma = spec.strength().scalar_values()?;
        let grid = spec.strength().grid;
        let sqrt_sigma = sigma.iter().map(|&v| v.max(0.0).sqrt()).collect();
        Ok(Self {
            grid,
            fft: GridFft::new(grid),
            sqrt_sigma,
            weights: mode_weights(&grid, spec.m()),
            m: spec.m(),
        })
    }

    pub fn sample(&self, seed: u64) -> FieldRealization {
        let rng = CounterRng::new(seed, 0);
        let stationary = synthesize_stationary(&self.fft, &self.weights, &rng);
        let values = self
            .sqrt_sigma
            .iter()
            .zip(&stationary)
            .map(|(s, f)| s * f)
            .collect();
        FieldRealization {
            grid: self.grid,
            values: FieldValues::Scalar(values),
            seed,
            m: self.m,
        }
    }
}

/// Vector sampler: d independent stationary components pushed through the
/// nodal PSD square root of the strength matrix.
pub struct VectorSampler {
    grid: SpatialGrid,
    fft: GridFft,
    sqrt_matrices: Vec<SymMat>,
    weights: Vec<f64>,
    m: f64,
}

impl VectorSampler {
    pub fn new(spec: &CheckedSourceSpec) -> Result<Self> {
        let matrices = spec.strength().matrix_values()?;
        let grid = spec.strength().grid;
        let tol = eigenvalue_tolerance(matrices);
        let sqrt_matrices = matrices
            .iter()
            .map(|m| m.sqrt_psd(tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid,
            fft: GridFft::new(grid),
            sqrt_matrices,
            weights: mode_weights(&grid, spec.m()),
            m: spec.m(),
        })
    }

    pub fn sample(&self, seed: u64) -> FieldRealization {
        let d = self.grid.dim();
        let len = self.grid.len();
        let stationary: Vec<Vec<f64>> = (0..d)
            .map(|c| {
                let rng = CounterRng::new(seed, c as u64);
                synthesize_stationary(&self.fft, &self.weights, &rng)
            })
            .collect();
        let mut components = vec![vec![0.0; len]; d];
        for idx in 0..len {
            let s = &self.sqrt_matrices[idx];
            for i in 0..d {
                let mut acc = 0.0;
                for j in 0..d {
                    acc += s.a[i][j] * stationary[j][idx];
                }
                components[i][idx] = acc;
            }
        }
        FieldRealization {
            grid: self.grid,
            values: FieldValues::Vector(components),
            seed,
            m: self.m,
        }
    }
}

/// Samples one scalar realization. Ensembles should construct a
/// [`ScalarSampler`] once and call it per seed.
pub fn sample_scalar(spec: &CheckedSourceSpec, seed: u64) -> Result<FieldRealization> {
    Ok(ScalarSampler::new(spec)?.sample(seed))
}

/// Samples one vector realization.
pub fn sample_vector(spec: &CheckedSourceSpec, seed: u64) -> Result<FieldRealization> {
    Ok(VectorSampler::new(spec)?.sample(seed))
}

/// Spectral Leray projection onto divergence-free fields: applies
/// I - xi xi^T / |xi|^2 modewise, leaving the zero mode untouched.
pub fn leray_project(f: &FieldRealization) -> Result<FieldRealization> {
    let components = f.vector_values()?;
    let grid = f.grid;
    if grid.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: grid.dim(),
        });
    }
    let fft = GridFft::new(grid);
    let len = grid.len();
    let mut hats: Vec<Vec<Complex64>> = components
        .iter()
        .map(|c| {
            let mut data: Vec<Complex64> =
                c.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft.forward(&mut data);
            data
        })
        .collect();
    let nyquist = grid.points_per_axis() / 2;
    for idx in 1..len {
        let ix = grid.unravel(idx);
        // Bins with a Nyquist component have no conjugate partner on the
        // grid, so no real divergence-free projection exists for them;
        // annihilate that shell (it carries the smallest spectral weight).
        if (0..3).any(|a| ix[a] == nyquist) {
            for c in 0..3 {
                hats[c][idx] = Complex64::new(0.0, 0.0);
            }
            continue;
        }
        let xi = grid.mode(idx);
        let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        let dot = hats[0][idx] * xi[0] + hats[1][idx] * xi[1] + hats[2][idx] * xi[2];
        for c in 0..3 {
            hats[c][idx] -= dot * (xi[c] / r2);
        }
    }
    let scale = 1.0 / len as f64;
    let projected = hats
        .into_iter()
        .map(|mut data| {
            fft.inverse(&mut data);
            data.iter().map(|z| z.re * scale).collect()
        })
        .collect();
    Ok(FieldRealization {
        grid,
        values: FieldValues::Vector(projected),
        seed: f.seed,
        m: f.m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{
        gaussian_bump_strength, matrix_bump_strength, validate_source, SourceSpec, WaveModel,
    };

    fn checked_scalar_spec(n_axis: usize) -> CheckedSourceSpec {
        let grid = SpatialGrid::standard(2, n_axis).unwrap();
        let sigma = gaussian_bump_strength(grid, [0.0; 3], 0.15, 1.0).unwrap();
        validate_source(
            WaveModel::polyharmonic(2, 1).unwrap(),
            SourceSpec { m: 1.5, s: 3, strength: sigma },
        )
        .unwrap()
    }

    #[test]
    fn zero_strength_gives_zero_field() {
        let grid = SpatialGrid::standard(2, 32).unwrap();
        let sigma = crate::params::StrengthField::zeros(grid);
        let spec = validate_source(
            WaveModel::polyharmonic(2, 1).unwrap(),
            SourceSpec { m: 1.0, s: 3, strength: sigma },
        )
        .unwrap();
        let f = sample_scalar(&spec, 99).unwrap();
        assert!(f.scalar_values().unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = checked_scalar_spec(32);
        let a = sample_scalar(&spec, 1234).unwrap();
        let b = sample_scalar(&spec, 1234).unwrap();
        let c = sample_scalar(&spec, 1235).unwrap();
        let av = a.scalar_values().unwrap();
        let bv = b.scalar_values().unwrap();
        assert!(av.iter().zip(bv).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(av, c.scalar_values().unwrap());
    }

    #[test]
    fn support_outside_unit_ball_is_exactly_zero() {
        let spec = checked_scalar_spec(32);
        let f = sample_scalar(&spec, 7).unwrap();
        let v = f.scalar_values().unwrap();
        for idx in 0..f.grid.len() {
            if norm(&f.grid.node(idx)) >= 1.0 {
                assert_eq!(v[idx], 0.0);
            }
        }
    }

    #[test]
    fn isotropic_matrix_strength_components_match_scalar_law() {
        // With sigma_matrix = sigma * I the square root is sqrt(sigma) * I and
        // component 0 shares its RNG stream with the scalar sampler, so the
        // two outputs are bit-identical.
        let grid = SpatialGrid::standard(2, 32).unwrap();
        let scalar = gaussian_bump_strength(grid, [0.0; 3], 0.15, 1.0).unwrap();
        let matrix = matrix_bump_strength(grid, [0.0; 3], 0.15, SymMat::identity(2)).unwrap();
        let cs = validate_source(
            WaveModel::polyharmonic(2, 1).unwrap(),
            SourceSpec { m: 1.5, s: 3, strength: scalar },
        )
        .unwrap();
        let cm = validate_source(
            WaveModel::elastic(2, 2.0, 1.0).unwrap(),
            SourceSpec { m: 1.5, s: 3, strength: matrix },
        )
        .unwrap();
        let fs = sample_scalar(&cs, 31).unwrap();
        let fm = sample_vector(&cm, 31).unwrap();
        let sv = fs.scalar_values().unwrap();
        let mv = &fm.vector_values().unwrap()[0];
        let max_diff = sv
            .iter()
            .zip(mv.iter())
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(max_diff < 1e-12, "max diff {max_diff}");
    }

    #[test]
    fn leray_annihilates_gradients() {
        let grid = SpatialGrid::standard(3, 16).unwrap();
        let fft = GridFft::new(grid);
        // Build a smooth periodic potential phi and its spectral gradient.
        let mut phi: Vec<Complex64> = (0..grid.len())
            .map(|idx| {
                let x = grid.node(idx);
                Complex64::new(
                    (2.0 * std::f64::consts::PI * x[0] / grid.box_width()).sin()
                        * (2.0 * std::f64::consts::PI * x[1] / grid.box_width()).cos()
                        + 0.3 * (4.0 * std::f64::consts::PI * x[2] / grid.box_width()).cos(),
                    0.0,
                )
            })
            .collect();
        fft.forward(&mut phi);
        let scale = 1.0 / grid.len() as f64;
        let mut comps = vec![vec![0.0; grid.len()]; 3];
        for c in 0..3 {
            let mut g: Vec<Complex64> = (0..grid.len())
                .map(|idx| {
                    let xi = grid.mode(idx);
                    Complex64::new(0.0, xi[c]) * phi[idx]
                })
                .collect();
            fft.inverse(&mut g);
            for idx in 0..grid.len() {
                comps[c][idx] = g[idx].re * scale;
            }
        }
        let grad = FieldRealization::from_vector_values(grid, comps).unwrap();
        let input_norm = grad
            .vector_values()
            .unwrap()
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |a, &v| a.max(v.abs()));
        let projected = leray_project(&grad).unwrap();
        let out_norm = projected
            .vector_values()
            .unwrap()
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |a, &v| a.max(v.abs()));
        assert!(out_norm <= 1e-10 * input_norm, "out {out_norm}, in {input_norm}");
    }

    #[test]
    fn leray_is_idempotent_and_divergence_free() {
        let grid = SpatialGrid::standard(3, 16).unwrap();
        let model = WaveModel::electromagnetic();
        let coeff = SymMat::identity(3);
        let strength = matrix_bump_strength(grid, [0.0; 3], 0.15, coeff).unwrap();
        let spec = validate_source(model, SourceSpec { m: 2.0, s: 4, strength }).unwrap();
        let f = sample_vector(&spec, 5).unwrap();
        let p1 = leray_project(&f).unwrap();
        let p2 = leray_project(&p1).unwrap();
        let v1 = p1.vector_values().unwrap();
        let v2 = p2.vector_values().unwrap();
        let mut max_diff = 0.0_f64;
        let mut max_abs = 0.0_f64;
        for c in 0..3 {
            for idx in 0..grid.len() {
                max_diff = max_diff.max((v1[c][idx] - v2[c][idx]).abs());
                max_abs = max_abs.max(v1[c][idx].abs());
            }
        }
        assert!(max_diff <= 1e-12 * max_abs.max(1.0), "max_diff {max_diff:.3e} vs {max_abs:.3e}");

        // Modewise Fourier divergence of the projected field is zero.
        let fft = GridFft::new(grid);
        let hats: Vec<Vec<Complex64>> = v1
            .iter()
            .map(|c| {
                let mut data: Vec<Complex64> =
                    c.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                fft.forward(&mut data);
                data
            })
            .collect();
        let mut hat_norm = 0.0_f64;
        for idx in 0..grid.len() {
            for c in 0..3 {
                hat_norm = hat_norm.max(hats[c][idx].norm());
            }
        }
        for idx in 1..grid.len() {
            let xi = grid.mode(idx);
            let div = hats[0][idx] * xi[0] + hats[1][idx] * xi[1] + hats[2][idx] * xi[2];
            let xi_norm = norm(&xi);
            assert!(div.norm() <= 1e-10 * xi_norm * hat_norm);
        }
    }

    #[test]
    fn leray_is_self_adjoint_on_the_grid() {
        // <P f, g> = <f, P g> with the grid inner product, to rounding.
        let grid = SpatialGrid::standard(3, 16).unwrap();
        let model = WaveModel::electromagnetic();
        let strength = matrix_bump_strength(grid, [0.0; 3], 0.15, SymMat::identity(3)).unwrap();
        let spec = validate_source(model, SourceSpec { m: 2.0, s: 4, strength }).unwrap();
        let f = sample_vector(&spec, 11).unwrap();
        let g = sample_vector(&spec, 12).unwrap();
        let pf = leray_project(&f).unwrap();
        let pg = leray_project(&g).unwrap();
        let ip = |a: &FieldRealization, b: &FieldRealization| -> f64 {
            let av = a.vector_values().unwrap();
            let bv = b.vector_values().unwrap();
            let mut acc = 0.0;
            for c in 0..3 {
                for idx in 0..grid.len() {
                    acc += av[c][idx] * bv[c][idx];
                }
            }
            acc * grid.cell_volume()
        };
        let lhs = ip(&pf, &g);
        let rhs = ip(&f, &pg);
        let scale = ip(&f, &f).abs().max(ip(&g, &g).abs());
        assert!((lhs - rhs).abs() <= 1e-12 * scale, "lhs {lhs}, rhs {rhs}");
    }

    #[test]
    fn doubling_sigma_doubles_pair_variance_exactly() {
        let grid = SpatialGrid::standard(2, 32).unwrap();
        let s1 = gaussian_bump_strength(grid, [0.0; 3], 0.15, 1.0).unwrap();
        let s2 = gaussian_bump_strength(grid, [0.0; 3], 0.15, 2.0).unwrap();
        let model = WaveModel::polyharmonic(2, 1).unwrap();
        let c1 = validate_source(model, SourceSpec { m: 1.5, s: 3, strength: s1 }).unwrap();
        let c2 = validate_source(model, SourceSpec { m: 1.5, s: 3, strength: s2 }).unwrap();
        let sam1 = ScalarSampler::new(&c1).unwrap();
        let sam2 = ScalarSampler::new(&c2).unwrap();
        let phi: Vec<f64> = (0..grid.len())
            .map(|idx| {
                let x = grid.node(idx);
                (-(norm(&x).powi(2)) / 0.08).exp()
            })
            .collect();
        // Same seeds: f_{2 sigma} = sqrt(2) f_sigma pointwise, so the pairing
        // variance ratio is exactly 2 up to rounding.
        let mut v1 = 0.0;
        let mut v2 = 0.0;
        for seed in 0..200u64 {
            let a = sam1.sample(seed).pair_with(&phi).unwrap();
            let b = sam2.sample(seed).pair_with(&phi).unwrap();
            v1 += a * a;
            v2 += b * b;
        }
        assert!((v2 / v1 - 2.0).abs() < 1e-12);
    }
}
