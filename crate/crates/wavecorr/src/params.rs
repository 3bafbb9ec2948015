//! Wave models, source specifications, and strength fields, with validation
//! of the admissibility conditions each model imposes.

use serde::{Deserialize, Serialize};

use crate::errors::{Error, Result};
use crate::grid::SpatialGrid;
use crate::linalg::{norm, sub, SymMat, Vec3};

/// Relative mass outside the unit ball above which a strength is rejected.
pub const SUPPORT_MASS_BUDGET: f64 = 1e-6;

/// Which stochastic wave equation drives the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WaveModel {
    /// (-Delta)^n u - k^{2n} u = f in dimension d.
    Polyharmonic { d: usize, n: usize },
    /// Maxwell's equations; always d = 3.
    Electromagnetic,
    /// Lame system with constants (lambda, mu) in dimension d.
    Elastic { d: usize, lambda: f64, mu: f64 },
}

impl WaveModel {
    pub fn polyharmonic(d: usize, n: usize) -> Result<Self> {
        if d != 2 && d != 3 {
            return Err(Error::DimensionMismatch { expected: 2, got: d });
        }
        if n < 1 {
            return Err(Error::InvalidInput(format!(
                "polyharmonic order must satisfy n >= 1, got {n}"
            )));
        }
        Ok(Self::Polyharmonic { d, n })
    }

    pub fn electromagnetic() -> Self {
        Self::Electromagnetic
    }

    pub fn elastic(d: usize, lambda: f64, mu: f64) -> Result<Self> {
        if d != 2 && d != 3 {
            return Err(Error::DimensionMismatch { expected: 2, got: d });
        }
        if !(mu > 0.0 && lambda + mu > 0.0) {
            return Err(Error::LameViolation { lambda, mu });
        }
        Ok(Self::Elastic { d, lambda, mu })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Polyharmonic { d, .. } => *d,
            Self::Electromagnetic => 3,
            Self::Elastic { d, .. } => *d,
        }
    }

    /// Admissible interval (lo, hi] for the covariance order m.
    pub fn order_interval(&self) -> (f64, f64) {
        match self {
            Self::Polyharmonic { d, n } => ((*d as f64) + 2.0 - 4.0 * (*n as f64), *d as f64),
            Self::Electromagnetic => (-1.0, 3.0),
            Self::Elastic { d, .. } => ((*d as f64) - 2.0, *d as f64),
        }
    }

    /// Whether the source strength is a scalar or a matrix field.
    pub fn wants_matrix_strength(&self) -> bool {
        !matches!(self, Self::Polyharmonic { .. })
    }

    /// Smoothness floor for the stability theorems: s must exceed this for
    /// the corresponding estimate to apply.
    pub fn smoothness_floor(&self) -> f64 {
        let d = self.dim() as f64;
        match self {
            Self::Polyharmonic { n, .. } => (d / 4.0 + 2.0 * (*n as f64) - 1.0).max(d),
            Self::Electromagnetic => 3.0,
            Self::Elastic { .. } => d,
        }
    }
}

/// Nodal strength values: nonnegative scalars or symmetric PSD matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum StrengthValues {
    Scalar(Vec<f64>),
    Matrix(Vec<SymMat>),
}

/// The reconstruction target: strength on a spatial grid, supported in the
/// unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthField {
    pub grid: SpatialGrid,
    pub values: StrengthValues,
}

impl StrengthField {
    pub fn zeros(grid: SpatialGrid) -> Self {
        Self {
            values: StrengthValues::Scalar(vec![0.0; grid.len()]),
            grid,
        }
    }

    /// Builds a scalar strength from a pointwise function, hard-clamped to
    /// zero outside the unit ball. Errors if the clamp discards more than
    /// the relative mass budget.
    pub fn from_fn(grid: SpatialGrid, f: impl Fn(&Vec3) -> f64) -> Result<Self> {
        let mut values = vec![0.0; grid.len()];
        let mut kept = 0.0;
        let mut discarded = 0.0;
        for idx in 0..grid.len() {
            let x = grid.node(idx);
            let v = f(&x);
            if norm(&x) < 1.0 {
                values[idx] = v;
                kept += v.abs();
            } else {
                discarded += v.abs();
            }
        }
        let total = kept + discarded;
        if total > 0.0 && discarded / total > SUPPORT_MASS_BUDGET {
            return Err(Error::SupportViolation {
                mass_fraction: discarded / total,
                budget: SUPPORT_MASS_BUDGET,
            });
        }
        Ok(Self {
            grid,
            values: StrengthValues::Scalar(values),
        })
    }

    /// Matrix analogue of [`StrengthField::from_fn`]; mass is measured in the
    /// Frobenius norm.
    pub fn from_matrix_fn(grid: SpatialGrid, f: impl Fn(&Vec3) -> SymMat) -> Result<Self> {
        let d = grid.dim();
        let mut values = vec![SymMat::zero(d); grid.len()];
        let mut kept = 0.0;
        let mut discarded = 0.0;
        for idx in 0..grid.len() {
            let x = grid.node(idx);
            let v = f(&x);
            if norm(&x) < 1.0 {
                values[idx] = v;
                kept += v.frobenius();
            } else {
                discarded += v.frobenius();
            }
        }
        let total = kept + discarded;
        if total > 0.0 && discarded / total > SUPPORT_MASS_BUDGET {
            return Err(Error::SupportViolation {
                mass_fraction: discarded / total,
                budget: SUPPORT_MASS_BUDGET,
            });
        }
        Ok(Self {
            grid,
            values: StrengthValues::Matrix(values),
        })
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self.values, StrengthValues::Scalar(_))
    }

    pub fn scalar_values(&self) -> Result<&[f64]> {
        match &self.values {
            StrengthValues::Scalar(v) => Ok(v),
            StrengthValues::Matrix(_) => Err(Error::UnvalidatedSpec("scalar strength required")),
        }
    }

    pub fn matrix_values(&self) -> Result<&[SymMat]> {
        match &self.values {
            StrengthValues::Matrix(v) => Ok(v),
            StrengthValues::Scalar(_) => Err(Error::UnvalidatedSpec("matrix strength required")),
        }
    }

    /// L1 norm of the strength, h^d sum of |values| (Frobenius for matrices).
    pub fn l1_norm(&self) -> f64 {
        let w = self.grid.cell_volume();
        match &self.values {
            StrengthValues::Scalar(v) => w * v.iter().map(|x| x.abs()).sum::<f64>(),
            StrengthValues::Matrix(v) => w * v.iter().map(|m| m.frobenius()).sum::<f64>(),
        }
    }

    /// L1 norm of the matrix trace field.
    pub fn trace_l1_norm(&self) -> Result<f64> {
        let w = self.grid.cell_volume();
        let v = self.matrix_values()?;
        Ok(w * v.iter().map(|m| m.trace().abs()).sum::<f64>())
    }

    /// Integral of the matrix strength, as a matrix.
    pub fn matrix_integral(&self) -> Result<SymMat> {
        let w = self.grid.cell_volume();
        let v = self.matrix_values()?;
        let d = self.grid.dim();
        let mut acc = SymMat::zero(d);
        for m in v {
            for i in 0..d {
                for j in 0..d {
                    acc.a[i][j] += m.a[i][j];
                }
            }
        }
        Ok(acc.scale(w))
    }

    pub fn sup_norm(&self) -> f64 {
        match &self.values {
            StrengthValues::Scalar(v) => v.iter().fold(0.0_f64, |a, x| a.max(x.abs())),
            StrengthValues::Matrix(v) => v.iter().fold(0.0_f64, |a, m| a.max(m.frobenius())),
        }
    }
}

/// Canonical test strength: an isotropic Gaussian bump clamped to the unit
/// ball. The caller keeps `width` small enough that the clamp is negligible;
/// the constructor rejects widths that discard real mass.
pub fn gaussian_bump_strength(
    grid: SpatialGrid,
    center: Vec3,
    width: f64,
    amplitude: f64,
) -> Result<StrengthField> {
    if norm(&center) >= 1.0 {
        return Err(Error::SupportViolation {
            mass_fraction: 1.0,
            budget: SUPPORT_MASS_BUDGET,
        });
    }
    if width <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "bump width must be positive, got {width}"
        )));
    }
    StrengthField::from_fn(grid, |x| {
        let r = sub(x, &center);
        amplitude * (-(norm(&r).powi(2)) / (2.0 * width * width)).exp()
    })
}

/// Matrix strength A * bump(x) with a constant symmetric coefficient matrix.
pub fn matrix_bump_strength(
    grid: SpatialGrid,
    center: Vec3,
    width: f64,
    coeff: SymMat,
) -> Result<StrengthField> {
    if norm(&center) >= 1.0 {
        return Err(Error::SupportViolation {
            mass_fraction: 1.0,
            budget: SUPPORT_MASS_BUDGET,
        });
    }
    StrengthField::from_matrix_fn(grid, |x| {
        let r = sub(x, &center);
        let bump = (-(norm(&r).powi(2)) / (2.0 * width * width)).exp();
        coeff.scale(bump)
    })
}

/// Source specification prior to validation.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    /// Covariance order exponent; the principal symbol is sigma(x) |xi|^-m.
    pub m: f64,
    /// Smoothness index used by the stability probes.
    pub s: u32,
    pub strength: StrengthField,
}

/// A spec that passed [`validate_source`] for its model. Operations that
/// require admissibility take this type, so an unvalidated spec cannot reach
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedSourceSpec {
    model: WaveModel,
    spec: SourceSpec,
}

impl CheckedSourceSpec {
    pub fn model(&self) -> &WaveModel {
        &self.model
    }

    pub fn spec(&self) -> &SourceSpec {
        &self.spec
    }

    pub fn m(&self) -> f64 {
        self.spec.m
    }

    pub fn s(&self) -> u32 {
        self.spec.s
    }

    pub fn strength(&self) -> &StrengthField {
        &self.spec.strength
    }

    /// Validating an already-checked spec returns it unchanged.
    pub fn revalidate(&self) -> CheckedSourceSpec {
        self.clone()
    }
}

/// Eigenvalue tolerance for the non-negative-definiteness check: scaled by
/// the largest nodal Frobenius norm to absorb floating-point eigenvalue
/// noise.
pub fn eigenvalue_tolerance(values: &[SymMat]) -> f64 {
    let max_frob = values.iter().fold(0.0_f64, |a, m| a.max(m.frobenius()));
    1e-10 * max_frob
}

/// Checks every admissibility condition of the model against the spec and
/// returns the checked spec unchanged on success.
pub fn validate_source(model: WaveModel, spec: SourceSpec) -> Result<CheckedSourceSpec> {
    let (lo, hi) = model.order_interval();
    if !(spec.m > lo && spec.m <= hi) {
        return Err(Error::OrderOutOfRange { m: spec.m, lo, hi });
    }
    if spec.s < 1 {
        return Err(Error::InvalidInput(
            "smoothness index s must be a positive integer".into(),
        ));
    }
    if spec.strength.grid.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: spec.strength.grid.dim(),
        });
    }
    match (&spec.strength.values, model.wants_matrix_strength()) {
        (StrengthValues::Scalar(_), true) => {
            return Err(Error::UnvalidatedSpec("model requires a matrix strength"))
        }
        (StrengthValues::Matrix(_), false) => {
            return Err(Error::UnvalidatedSpec("model requires a scalar strength"))
        }
        _ => {}
    }
    let grid = spec.strength.grid;
    match &spec.strength.values {
        StrengthValues::Scalar(v) => {
            for (idx, &x) in v.iter().enumerate() {
                if x < 0.0 {
                    return Err(Error::NotNonnegDefinite {
                        eigenvalue: x,
                        tolerance: 0.0,
                    });
                }
                if x != 0.0 && norm(&grid.node(idx)) >= 1.0 {
                    return Err(Error::SupportViolation {
                        mass_fraction: 1.0,
                        budget: 0.0,
                    });
                }
            }
        }
        StrengthValues::Matrix(v) => {
            let tol = eigenvalue_tolerance(v);
            for (idx, m) in v.iter().enumerate() {
                if !m.is_symmetric(tol) {
                    return Err(Error::InvalidInput(format!(
                        "nodal strength matrix at node {idx} is not symmetric"
                    )));
                }
                let min_eig = m.min_eigenvalue();
                if min_eig < -tol {
                    return Err(Error::NotNonnegDefinite {
                        eigenvalue: min_eig,
                        tolerance: tol,
                    });
                }
                if m.frobenius() != 0.0 && norm(&grid.node(idx)) >= 1.0 {
                    return Err(Error::SupportViolation {
                        mass_fraction: 1.0,
                        budget: 0.0,
                    });
                }
            }
        }
    }
    Ok(CheckedSourceSpec { model, spec })
}
