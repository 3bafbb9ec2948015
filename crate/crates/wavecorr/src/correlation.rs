//! Far-field correlation estimation and the analytic (r = 0) correlation
//! pathway, plus the sup-norm statistic M(k) and its sandwich bounds.
//!
//! Correlations are plain products E[u(xhat) u(yhat)] and outer products
//! E[u(xhat) u(yhat)^T] WITHOUT complex conjugation. This deliberately
//! differs from the usual covariance convention; the whole recovery theory
//! is built on the unconjugated product, whose delta collapse lands on
//! sigma_hat(k(xhat + yhat)).

use num_complex::Complex64;

use crate::errors::{Error, Result};
use crate::farfield::{beta_d, ElasticWavenumbers};
use crate::linalg::{add, projector_onto, projector_perp, scale, CMat, Vec3};
use crate::par::REDUCE_CHUNK;
use crate::params::StrengthField;
use crate::sigma_hat::{SigmaHatMatrix, SigmaHatScalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pathway {
    MonteCarlo,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorrValue {
    Scalar(Complex64),
    Matrix(CMat),
}

impl CorrValue {
    /// |value| for scalars, Frobenius norm for matrices.
    pub fn magnitude(&self) -> f64 {
        match self {
            CorrValue::Scalar(z) => z.norm(),
            CorrValue::Matrix(m) => m.frobenius(),
        }
    }

    pub fn scalar(&self) -> Result<Complex64> {
        match self {
            CorrValue::Scalar(z) => Ok(*z),
            CorrValue::Matrix(_) => Err(Error::UnvalidatedSpec("scalar correlation required")),
        }
    }

    pub fn matrix(&self) -> Result<CMat> {
        match self {
            CorrValue::Matrix(m) => Ok(*m),
            CorrValue::Scalar(_) => Err(Error::UnvalidatedSpec("matrix correlation required")),
        }
    }
}

/// Estimated or analytic correlation at one direction pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationRecord {
    pub xhat: Vec3,
    pub yhat: Vec3,
    pub k: f64,
    pub value: CorrValue,
    pub n_samples: usize,
    pub stderr: f64,
    pub pathway: Pathway,
}

/// Deterministic chunked sum: fixed-size chunks accumulated in index order,
/// so the result does not depend on thread count.
pub(crate) fn chunked_sum(zs: &[Complex64]) -> Complex64 {
    zs.chunks(REDUCE_CHUNK)
        .map(|c| c.iter().sum::<Complex64>())
        .sum()
}

/// Sample mean of u(xhat) u(yhat) over an ensemble, with the per-entry
/// standard error of the mean.
pub fn mc_correlation(
    at_x: &[Complex64],
    at_y: &[Complex64],
    xhat: Vec3,
    yhat: Vec3,
    k: f64,
) -> Result<CorrelationRecord> {
    if at_x.len() != at_y.len() {
        return Err(Error::InvalidInput(
            "ensembles at xhat and yhat differ in length".into(),
        ));
    }
    let n = at_x.len();
    if n < 2 {
        return Err(Error::EnsembleTooSmall { n });
    }
    let products: Vec<Complex64> = at_x.iter().zip(at_y).map(|(a, b)| a * b).collect();
    let mean = chunked_sum(&products) / n as f64;
    let var = products
        .iter()
        .map(|z| (z - mean).norm_sqr())
        .sum::<f64>()
        / (n as f64 - 1.0);
    Ok(CorrelationRecord {
        xhat,
        yhat,
        k,
        value: CorrValue::Scalar(mean),
        n_samples: n,
        stderr: (var / n as f64).sqrt(),
        pathway: Pathway::MonteCarlo,
    })
}

/// Outer-product analogue for vector far fields; stderr is the largest
/// per-entry standard error.
pub fn mc_correlation_matrix(
    at_x: &[[Complex64; 3]],
    at_y: &[[Complex64; 3]],
    d: usize,
    xhat: Vec3,
    yhat: Vec3,
    k: f64,
) -> Result<CorrelationRecord> {
    if at_x.len() != at_y.len() {
        return Err(Error::InvalidInput(
            "ensembles at xhat and yhat differ in length".into(),
        ));
    }
    let n = at_x.len();
    if n < 2 {
        return Err(Error::EnsembleTooSmall { n });
    }
    let mut mean = CMat::zero(d);
    let mut stderr_max = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            let products: Vec<Complex64> = at_x
                .iter()
                .zip(at_y)
                .map(|(u, v)| u[i] * v[j])
                .collect();
            let entry_mean = chunked_sum(&products) / n as f64;
            let var = products
                .iter()
                .map(|z| (z - entry_mean).norm_sqr())
                .sum::<f64>()
                / (n as f64 - 1.0);
            mean.a[i][j] = entry_mean;
            stderr_max = stderr_max.max((var / n as f64).sqrt());
        }
    }
    Ok(CorrelationRecord {
        xhat,
        yhat,
        k,
        value: CorrValue::Matrix(mean),
        n_samples: n,
        stderr: stderr_max,
        pathway: Pathway::MonteCarlo,
    })
}

fn gamma_of(xhat: &Vec3, yhat: &Vec3, k: f64) -> Vec3 {
    scale(&add(xhat, yhat), k)
}

fn require_k_above_one(k: f64) -> Result<()> {
    if k <= 1.0 {
        return Err(Error::InvalidInput(format!(
            "analytic correlation requires k > 1, got {k}"
        )));
    }
    Ok(())
}

/// Analytic r = 0 correlation for the polyharmonic model:
/// F(xhat, yhat) = (beta_d^2 / n^2) k^{d+1-4n-m} sigma_hat(k(xhat+yhat)).
pub fn analytic_correlation_poly(
    sigma_hat: &dyn SigmaHatScalar,
    k: f64,
    n: usize,
    d: usize,
    m: f64,
    xhat: Vec3,
    yhat: Vec3,
) -> Result<CorrelationRecord> {
    require_k_above_one(k)?;
    let beta = beta_d(d);
    let pref = beta * beta / ((n * n) as f64)
        * k.powf(d as f64 + 1.0 - 4.0 * n as f64 - m);
    let gamma = gamma_of(&xhat, &yhat, k);
    Ok(CorrelationRecord {
        xhat,
        yhat,
        k,
        value: CorrValue::Scalar(pref * sigma_hat.eval(&gamma)),
        n_samples: 0,
        stderr: 0.0,
        pathway: Pathway::Analytic,
    })
}

/// Analytic electromagnetic correlation matrix:
/// E[E_inf(xhat) E_inf(yhat)^T] = -beta_3^2 k^{2-m} sigma_hat(k(xhat+yhat)).
pub fn analytic_correlation_em(
    sigma_hat: &dyn SigmaHatMatrix,
    k: f64,
    m: f64,
    xhat: Vec3,
    yhat: Vec3,
) -> Result<CorrelationRecord> {
    require_k_above_one(k)?;
    if sigma_hat.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: sigma_hat.dim(),
        });
    }
    let beta = beta_d(3);
    let pref = -beta * beta * k.powf(2.0 - m);
    let gamma = gamma_of(&xhat, &yhat, k);
    Ok(CorrelationRecord {
        xhat,
        yhat,
        k,
        value: CorrValue::Matrix(sigma_hat.eval(&gamma).scale(pref)),
        n_samples: 0,
        stderr: 0.0,
        pathway: Pathway::Analytic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElasticBranch {
    P,
    S,
}

/// Analytic elastic correlation matrices, projector-sandwiched transforms at
/// the branch wavenumber.
pub fn analytic_correlation_elastic(
    sigma_hat: &dyn SigmaHatMatrix,
    k: f64,
    lambda: f64,
    mu: f64,
    m: f64,
    xhat: Vec3,
    yhat: Vec3,
    branch: ElasticBranch,
) -> Result<CorrelationRecord> {
    require_k_above_one(k)?;
    let d = sigma_hat.dim();
    let waves = ElasticWavenumbers::new(k, lambda, mu)?;
    let beta = beta_d(d);
    let (speed, kb) = match branch {
        ElasticBranch::P => (waves.c_p, waves.k_p),
        ElasticBranch::S => (waves.c_s, waves.k_s),
    };
    let pref = beta * beta * speed.powf(d as f64 + 2.0 - m) * k.powf(d as f64 - 3.0 - m);
    let gamma = gamma_of(&xhat, &yhat, kb);
    let transform = sigma_hat.eval(&gamma);
    let value = match branch {
        ElasticBranch::P => transform
            .sandwich(&projector_onto(&xhat, d), &projector_onto(&yhat, d))
            .scale(pref),
        ElasticBranch::S => transform
            .sandwich(&projector_perp(&xhat, d), &projector_perp(&yhat, d))
            .scale(pref),
    };
    Ok(CorrelationRecord {
        xhat,
        yhat,
        k,
        value: CorrValue::Matrix(value),
        n_samples: 0,
        stderr: 0.0,
        pathway: Pathway::Analytic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupModel {
    Polyharmonic,
    Electromagnetic,
    Elastic,
}

/// Sup-norm statistic over a direction-pair grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupStatistic {
    pub k: f64,
    pub value: f64,
    pub resolution: usize,
    pub model: SupModel,
}

/// Max of |value| (scalar) or Frobenius norm (matrix) over the records; for
/// elastic pass records from both branches.
pub fn sup_statistic(
    records: &[CorrelationRecord],
    resolution: usize,
    model: SupModel,
) -> Result<SupStatistic> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let k = records[0].k;
    if records.iter().any(|r| r.k != k) {
        return Err(Error::InvalidInput(
            "sup statistic requires records at a common wavenumber".into(),
        ));
    }
    let value = records
        .iter()
        .map(|r| r.value.magnitude())
        .fold(0.0_f64, f64::max);
    Ok(SupStatistic {
        k,
        value,
        resolution,
        model,
    })
}

/// Direction-pair grid with the antipodal pairs always included explicitly;
/// the remaining pairs stride through the direction set.
pub fn pair_grid(directions: &[Vec3], strides: &[usize]) -> Vec<(Vec3, Vec3)> {
    let mut pairs: Vec<(Vec3, Vec3)> = directions
        .iter()
        .map(|x| (*x, [-x[0], -x[1], -x[2]]))
        .collect();
    let n = directions.len();
    for &s in strides {
        if s == 0 || s >= n {
            continue;
        }
        for i in 0..n {
            pairs.push((directions[i], directions[(i + s) % n]));
        }
    }
    pairs
}

/// Margin report for the sandwich bounds on M(k).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub k: f64,
    pub m_value: f64,
    pub lower: f64,
    pub upper: Option<f64>,
    pub within: bool,
}

const SANDWICH_REL_TOL: f64 = 1e-10;

fn within_bounds(m: f64, lower: f64, upper: Option<f64>) -> bool {
    let scale = m.abs().max(lower.abs()).max(1e-300);
    let lo_ok = m >= lower - SANDWICH_REL_TOL * scale;
    let up_ok = upper.map_or(true, |u| m <= u + SANDWICH_REL_TOL * scale);
    lo_ok && up_ok
}

/// Polyharmonic sandwich: (|beta_d|^2/n^2)(||sigma||_1 -+ C1/k) k^{d+1-4n-m}.
/// Pass c1 = 0 on the analytic pathway.
pub fn sandwich_check_poly(
    m_stat: &SupStatistic,
    sigma: &StrengthField,
    n: usize,
    m: f64,
    c1: f64,
) -> Result<SandwichReport> {
    require_k_above_one(m_stat.k)?;
    let d = sigma.grid.dim();
    let k = m_stat.k;
    let beta_sq = beta_d(d).norm_sqr();
    let base = beta_sq / ((n * n) as f64) * k.powf(d as f64 + 1.0 - 4.0 * n as f64 - m);
    let l1 = sigma.l1_norm();
    let lower = base * (l1 - c1 / k);
    let upper = base * (l1 + c1 / k);
    Ok(SandwichReport {
        k,
        m_value: m_stat.value,
        lower,
        upper: Some(upper),
        within: within_bounds(m_stat.value, lower, Some(upper)),
    })
}

/// Electromagnetic lower bound |beta_3|^2 k^{2-m} (||int sigma||_F - C2/k);
/// the matching upper bound replaces the integral norm by the L1 norm.
pub fn sandwich_check_em(
    m_stat: &SupStatistic,
    sigma: &StrengthField,
    m: f64,
    c2: f64,
) -> Result<SandwichReport> {
    require_k_above_one(m_stat.k)?;
    let k = m_stat.k;
    let beta_sq = beta_d(3).norm_sqr();
    let integral_norm = sigma.matrix_integral()?.frobenius();
    let lower = beta_sq * k.powf(2.0 - m) * (integral_norm - c2 / k);
    let upper = beta_sq * k.powf(2.0 - m) * (sigma.l1_norm() + c2 / k);
    Ok(SandwichReport {
        k,
        m_value: m_stat.value,
        lower,
        upper: Some(upper),
        within: within_bounds(m_stat.value, lower, Some(upper)),
    })
}

/// Elastic lower bound
/// (|beta_d|^2 c_p^{d+2-m}/d) k^{d-3-m} ||Tr sigma||_1 - C2 |beta_d|^2 c_p^{d+1-m} k^{d-4-m}.
/// The theory provides no matching upper bound.
pub fn sandwich_check_elastic(
    m_stat: &SupStatistic,
    sigma: &StrengthField,
    lambda: f64,
    mu: f64,
    m: f64,
    c2: f64,
) -> Result<SandwichReport> {
    require_k_above_one(m_stat.k)?;
    let d = sigma.grid.dim();
    let k = m_stat.k;
    let waves = ElasticWavenumbers::new(k, lambda, mu)?;
    let beta_sq = beta_d(d).norm_sqr();
    let trace_l1 = sigma.trace_l1_norm()?;
    let lower = beta_sq * waves.c_p.powf(d as f64 + 2.0 - m) / d as f64
        * k.powf(d as f64 - 3.0 - m)
        * trace_l1
        - c2 * beta_sq * waves.c_p.powf(d as f64 + 1.0 - m) * k.powf(d as f64 - 4.0 - m);
    Ok(SandwichReport {
        k,
        m_value: m_stat.value,
        lower,
        upper: None,
        within: within_bounds(m_stat.value, lower, None),
    })
}

/// Empirical residual budget: the polyharmonic r-term enters F as
/// (beta_d^2/n^2) k^{d+1-4n} * (r integral), with |r integral| <= C1 k^{-m-1},
/// so each observed |MC - analytic| deviation maps to a C1 candidate. The
/// returned max is reported, never asserted as a theoretical constant.
pub fn empirical_residual_budget_poly(
    deviations: &[(f64, f64)],
    n: usize,
    d: usize,
    m: f64,
) -> f64 {
    let beta_sq = beta_d(d).norm_sqr();
    deviations
        .iter()
        .map(|&(k, dev)| {
            dev * ((n * n) as f64) / beta_sq * k.powf(4.0 * n as f64 - 1.0 - d as f64 + m + 1.0)
        })
        .fold(0.0, f64::max)
}

/// Least-squares slope of log(y) against log(x).
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}
