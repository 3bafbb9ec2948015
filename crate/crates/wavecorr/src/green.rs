//! Green's kernels for the polyharmonic operator and a direct near-field
//! solver used to validate the far-field asymptotics.

use num_complex::Complex64;

use crate::errors::{Error, Result};
use crate::farfield;
use crate::linalg::{norm, scale, sub, Vec3};
use crate::par;
use crate::sampler::FieldRealization;
use crate::special::{hankel0, SplitWavenumbers};

/// Fundamental solution of the Helmholtz operator at (possibly complex)
/// wavenumber kappa: (i/4) H0^(1)(kappa r) in 2-d, e^{i kappa r}/(4 pi r)
/// in 3-d.
pub fn helmholtz_green(x: &Vec3, y: &Vec3, kappa: Complex64, d: usize) -> Result<Complex64> {
    let r = norm(&sub(x, y));
    if r == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    helmholtz_green_radial(r, kappa, d)
}

fn helmholtz_green_radial(r: f64, kappa: Complex64, d: usize) -> Result<Complex64> {
    match d {
        2 => Ok(Complex64::new(0.0, 0.25) * hankel0(kappa * r)?),
        3 => {
            let ikr = Complex64::new(0.0, 1.0) * kappa * r;
            Ok(ikr.exp() / (4.0 * std::f64::consts::PI * r))
        }
        _ => Err(Error::DimensionMismatch { expected: 3, got: d }),
    }
}

/// Green's function of (-Delta)^n - k^{2n} as the weighted sum of Helmholtz
/// kernels at the rotated wavenumbers.
pub fn polyharmonic_green(x: &Vec3, y: &Vec3, k: f64, n: usize, d: usize) -> Result<Complex64> {
    let r = norm(&sub(x, y));
    if r == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let ctx = PolyGreenCtx::new(k, n, d)?;
    ctx.eval(r)
}

/// Precomputed splitting for repeated kernel evaluations.
struct PolyGreenCtx {
    split: SplitWavenumbers,
    scale: f64,
    d: usize,
}

impl PolyGreenCtx {
    fn new(k: f64, n: usize, d: usize) -> Result<Self> {
        let split = SplitWavenumbers::new(k, n)?;
        let scale = 1.0 / (n as f64 * k.powi(2 * n as i32));
        Ok(Self { split, scale, d })
    }

    fn eval(&self, r: f64) -> Result<Complex64> {
        let mut sum = Complex64::new(0.0, 0.0);
        for kappa in &self.split.kappas {
            sum += kappa * kappa * helmholtz_green_radial(r, *kappa, self.d)?;
        }
        Ok(sum * self.scale)
    }
}

fn target_outside_box(f: &FieldRealization, target: &Vec3) -> bool {
    let half = f.grid.half_width();
    (0..f.grid.dim()).any(|axis| target[axis].abs() > half)
}

/// Near-field solution u(x) = -integral G(x, y, k) f(y) dy by grid
/// quadrature over the support of f. Targets must lie outside the grid box
/// so the kernel is never singular.
pub fn near_field(
    f: &FieldRealization,
    targets: &[Vec3],
    k: f64,
    n: usize,
) -> Result<Vec<Complex64>> {
    let values = f.scalar_values()?;
    let grid = f.grid;
    let d = grid.dim();
    for t in targets {
        if !target_outside_box(f, t) {
            return Err(Error::TargetInsideSupport);
        }
    }
    let ctx = PolyGreenCtx::new(k, n, d)?;
    // Gather the support once; strengths vanish outside the unit ball.
    let support: Vec<(Vec3, f64)> = (0..grid.len())
        .filter_map(|idx| {
            let v = values[idx];
            if v != 0.0 {
                Some((grid.node(idx), v))
            } else {
                None
            }
        })
        .collect();
    let w = grid.cell_volume();
    let out = par::map_indexed(targets.len(), |t| {
        let target = targets[t];
        let mut acc = Complex64::new(0.0, 0.0);
        for (y, v) in &support {
            let r = norm(&sub(&target, y));
            acc += ctx.eval(r).expect("r > 0 for outside targets") * *v;
        }
        -acc * w
    });
    Ok(out)
}

/// Deviation of the rescaled near field from the far-field pattern:
/// |R^{(d-1)/2} e^{-ikR} u(R xhat) - u_inf(xhat)| per radius.
pub fn asymptote_residual(
    f: &FieldRealization,
    k: f64,
    n: usize,
    xhat: &Vec3,
    radii: &[f64],
) -> Result<Vec<f64>> {
    if radii.iter().any(|&r| r < 10.0) {
        return Err(Error::InvalidInput(
            "asymptote residual radii must be >= 10".into(),
        ));
    }
    let d = f.grid.dim();
    let u_inf = farfield::poly_farfield(f, k, n, std::slice::from_ref(xhat))?[0]
        .scalar_value()?;
    let targets: Vec<Vec3> = radii.iter().map(|&r| scale(xhat, r)).collect();
    let u = near_field(f, &targets, k, n)?;
    Ok(radii
        .iter()
        .zip(u)
        .map(|(&r, u_r)| {
            let rescaled = u_r
                * r.powf((d as f64 - 1.0) / 2.0)
                * Complex64::from_polar(1.0, -k * r);
            (rescaled - u_inf).norm()
        })
        .collect())
}
