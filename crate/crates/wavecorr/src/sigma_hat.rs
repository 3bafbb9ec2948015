//! Evaluators for the Fourier transform of strength fields, with the
//! convention sigma_hat(gamma) = integral sigma(x) e^{-i gamma.x} dx.
//!
//! The analytic correlation pathway consumes these; the closed-form Gaussian
//! evaluator is exact for the unclamped bump, while the quadrature evaluator
//! works for arbitrary grid strengths by direct summation.

use num_complex::Complex64;

use crate::errors::Result;
use crate::grid::SpatialGrid;
use crate::linalg::{dot, CMat, SymMat, Vec3};
use crate::params::StrengthField;

pub trait SigmaHatScalar: Sync {
    fn eval(&self, gamma: &Vec3) -> Complex64;
}

pub trait SigmaHatMatrix: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, gamma: &Vec3) -> CMat;
}

/// Closed form for the Gaussian bump amplitude * exp(-|x-c|^2 / (2 a^2)):
/// sigma_hat(gamma) = amplitude (2 pi a^2)^{d/2} exp(-a^2 |gamma|^2 / 2) e^{-i gamma.c}.
/// The hard clamp outside the unit ball is neglected; its contribution is
/// below e^{-1/(2 a^2)} of the mass for the admissible widths.
#[derive(Debug, Clone, Copy)]
pub struct GaussianSigmaHat {
    pub d: usize,
    pub center: Vec3,
    pub width: f64,
    pub amplitude: f64,
}

impl SigmaHatScalar for GaussianSigmaHat {
    fn eval(&self, gamma: &Vec3) -> Complex64 {
        let a2 = self.width * self.width;
        let g2 = dot(gamma, gamma);
        let mag = self.amplitude
            * (2.0 * std::f64::consts::PI * a2).powf(self.d as f64 / 2.0)
            * (-a2 * g2 / 2.0).exp();
        mag * Complex64::from_polar(1.0, -dot(gamma, &self.center))
    }
}

/// Direct-summation quadrature of a nodal scalar field at an arbitrary
/// frequency; phases factor over the tensor grid so no complex exponential
/// is evaluated in the inner loop.
pub(crate) fn grid_fourier_scalar(grid: &SpatialGrid, values: &[f64], w: &Vec3) -> Complex64 {
    let n = grid.points_per_axis();
    let d = grid.dim();
    let tables: Vec<Vec<Complex64>> = (0..d)
        .map(|axis| {
            (0..n)
                .map(|i| Complex64::from_polar(1.0, -w[axis] * grid.axis_coord(i)))
                .collect()
        })
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    match d {
        2 => {
            for i0 in 0..n {
                let row = &values[i0 * n..(i0 + 1) * n];
                let mut row_sum = Complex64::new(0.0, 0.0);
                for (i1, &v) in row.iter().enumerate() {
                    if v != 0.0 {
                        row_sum += tables[1][i1] * v;
                    }
                }
                acc += tables[0][i0] * row_sum;
            }
        }
        3 => {
            for i0 in 0..n {
                let mut plane_sum = Complex64::new(0.0, 0.0);
                for i1 in 0..n {
                    let base = (i0 * n + i1) * n;
                    let row = &values[base..base + n];
                    let mut row_sum = Complex64::new(0.0, 0.0);
                    for (i2, &v) in row.iter().enumerate() {
                        if v != 0.0 {
                            row_sum += tables[2][i2] * v;
                        }
                    }
                    plane_sum += tables[1][i1] * row_sum;
                }
                acc += tables[0][i0] * plane_sum;
            }
        }
        _ => unreachable!("grids are 2- or 3-dimensional"),
    }
    acc * grid.cell_volume()
}

/// Matrix analogue of [`grid_fourier_scalar`], accumulating all d x d entries
/// in one pass.
pub(crate) fn grid_fourier_matrix(grid: &SpatialGrid, values: &[SymMat], w: &Vec3) -> CMat {
    let n = grid.points_per_axis();
    let d = grid.dim();
    let tables: Vec<Vec<Complex64>> = (0..d)
        .map(|axis| {
            (0..n)
                .map(|i| Complex64::from_polar(1.0, -w[axis] * grid.axis_coord(i)))
                .collect()
        })
        .collect();
    let mut acc = CMat::zero(d);
    let mut idx = 0usize;
    // Row-major node order: the phase is the product of per-axis tables.
    let mut outer = vec![0usize; d];
    loop {
        let mut phase = tables[0][outer[0]];
        for axis in 1..d {
            phase *= tables[axis][outer[axis]];
        }
        let m = &values[idx];
        for i in 0..d {
            for j in 0..d {
                if m.a[i][j] != 0.0 {
                    acc.a[i][j] += phase * m.a[i][j];
                }
            }
        }
        idx += 1;
        if idx == grid.len() {
            break;
        }
        let mut axis = d - 1;
        loop {
            outer[axis] += 1;
            if outer[axis] < n {
                break;
            }
            outer[axis] = 0;
            if axis == 0 {
                break;
            }
            axis -= 1;
        }
    }
    acc.scale(Complex64::new(grid.cell_volume(), 0.0))
}

/// Quadrature evaluator over a planted scalar strength.
pub struct QuadratureSigmaHat<'a> {
    field: &'a StrengthField,
}

impl<'a> QuadratureSigmaHat<'a> {
    pub fn new(field: &'a StrengthField) -> Result<Self> {
        field.scalar_values()?;
        Ok(Self { field })
    }
}

impl SigmaHatScalar for QuadratureSigmaHat<'_> {
    fn eval(&self, gamma: &Vec3) -> Complex64 {
        let values = self.field.scalar_values().expect("checked scalar");
        grid_fourier_scalar(&self.field.grid, values, gamma)
    }
}

/// Closed form for a matrix bump coeff * gaussian(x).
#[derive(Debug, Clone, Copy)]
pub struct MatrixBumpSigmaHat {
    pub scalar: GaussianSigmaHat,
    pub coeff: SymMat,
}

impl SigmaHatMatrix for MatrixBumpSigmaHat {
    fn dim(&self) -> usize {
        self.coeff.d
    }

    fn eval(&self, gamma: &Vec3) -> CMat {
        let s = self.scalar.eval(gamma);
        CMat::from_sym(&self.coeff).scale(s / self.scalar.amplitude)
    }
}

/// Quadrature evaluator over a planted matrix strength.
pub struct QuadratureSigmaHatMatrix<'a> {
    field: &'a StrengthField,
}

impl<'a> QuadratureSigmaHatMatrix<'a> {
    pub fn new(field: &'a StrengthField) -> Result<Self> {
        field.matrix_values()?;
        Ok(Self { field })
    }
}

impl SigmaHatMatrix for QuadratureSigmaHatMatrix<'_> {
    fn dim(&self) -> usize {
        self.field.grid.dim()
    }

    fn eval(&self, gamma: &Vec3) -> CMat {
        let values = self.field.matrix_values().expect("checked matrix");
        grid_fourier_matrix(&self.field.grid, values, gamma)
    }
}
