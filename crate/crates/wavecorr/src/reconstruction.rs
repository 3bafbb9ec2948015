//! Inverse maps: direction synthesis for a target frequency, Fourier
//! coefficient recovery for the three wave models, cutoff inverse Fourier
//! synthesis, and stability probes.

use num_complex::Complex64;

use crate::correlation::{SupStatistic, SupModel};
use crate::errors::{Error, Result};
use crate::farfield::{beta_d, ElasticWavenumbers};
use crate::linalg::{add, basis, cross, dot, neg, norm, normalize, scale, sub, CMat, Vec3};
use crate::par;
use crate::params::StrengthField;

/// Unit directions xhat, yhat with k(xhat + yhat) = gamma, plus the
/// orthogonal unit vector d1 used to build them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionPair {
    pub gamma: Vec3,
    pub k: f64,
    pub xhat: Vec3,
    pub yhat: Vec3,
    pub d1: Vec3,
}

/// Deterministic unit vector orthogonal to gamma: start from the canonical
/// basis vector least aligned with gamma (lowest index on ties) and project.
/// At gamma = 0 the convention is e_1.
pub fn orthogonal_unit(gamma: &Vec3, d: usize) -> Vec3 {
    let g = norm(gamma);
    if g == 0.0 {
        return basis(0);
    }
    let ghat = scale(gamma, 1.0 / g);
    let mut best = 0;
    let mut best_align = f64::INFINITY;
    for i in 0..d {
        let align = ghat[i].abs();
        if align < best_align - 1e-15 {
            best_align = align;
            best = i;
        }
    }
    let e = basis(best);
    let proj = dot(&e, &ghat);
    normalize(&sub(&e, &scale(&ghat, proj)))
}

/// Direction pair for a target frequency: xhat = (gamma + sqrt(4k^2-|gamma|^2) d1)/(2k),
/// yhat the conjugate choice. Requires |gamma| <= 2k.
pub fn directions_for_gamma(gamma: &Vec3, k: f64, d: usize) -> Result<DirectionPair> {
    let g = norm(gamma);
    if g > 2.0 * k {
        return Err(Error::FrequencyTooHigh {
            gamma_norm: g,
            limit: 2.0 * k,
        });
    }
    let d1 = orthogonal_unit(gamma, d);
    let s = (4.0 * k * k - g * g).max(0.0).sqrt();
    let xhat = scale(&add(gamma, &scale(&d1, s)), 1.0 / (2.0 * k));
    let yhat = scale(&sub(gamma, &scale(&d1, s)), 1.0 / (2.0 * k));
    Ok(DirectionPair {
        gamma: *gamma,
        k,
        xhat,
        yhat,
        d1,
    })
}

/// Inverts the analytic polyharmonic relation:
/// sigma_hat(gamma) = (n^2 / beta_d^2) k^{m+4n-d-1} F(xhat(gamma), yhat(gamma), k).
pub fn recover_sigma_hat_poly(
    f_value: Complex64,
    gamma: &Vec3,
    k: f64,
    n: usize,
    d: usize,
    m: f64,
) -> Result<Complex64> {
    let g = norm(gamma);
    if g > 2.0 * k {
        return Err(Error::FrequencyTooHigh {
            gamma_norm: g,
            limit: 2.0 * k,
        });
    }
    let beta = beta_d(d);
    let scale = ((n * n) as f64) / (beta * beta)
        * k.powf(m + 4.0 * n as f64 - d as f64 - 1.0);
    Ok(scale * f_value)
}

/// Inverts the electromagnetic relation:
/// sigma_hat(gamma) = -(k^{m-2} / beta_3^2) E[E_inf(xhat) E_inf(yhat)^T].
pub fn recover_sigma_hat_em(corr: &CMat, gamma: &Vec3, k: f64, m: f64) -> Result<CMat> {
    let g = norm(gamma);
    if g > 2.0 * k {
        return Err(Error::FrequencyTooHigh {
            gamma_norm: g,
            limit: 2.0 * k,
        });
    }
    let beta = beta_d(3);
    Ok(corr.scale(-k.powf(m - 2.0) / (beta * beta)))
}

/// The 2x2 system tying the p- and s-branch probes to the rotated diagonal
/// entries b11, b22 of the coefficient matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaSystem {
    pub theta_p: f64,
    pub theta_s: f64,
    pub det: f64,
}

impl ThetaSystem {
    pub fn new(gamma_norm: f64, k: f64, lambda: f64, mu: f64) -> Result<Self> {
        let waves = ElasticWavenumbers::new(k, lambda, mu)?;
        if gamma_norm > waves.k_p {
            return Err(Error::FrequencyTooHigh {
                gamma_norm,
                limit: waves.k_p,
            });
        }
        let theta_p = gamma_norm / (2.0 * waves.k_p);
        let theta_s = gamma_norm / (2.0 * waves.k_s);
        Ok(Self {
            theta_p,
            theta_s,
            det: 1.0 - theta_p * theta_p - theta_s * theta_s,
        })
    }

    /// Coefficient matrix [[theta_p^2, -(1-theta_p^2)], [1-theta_s^2, -theta_s^2]].
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let tp2 = self.theta_p * self.theta_p;
        let ts2 = self.theta_s * self.theta_s;
        [[tp2, -(1.0 - tp2)], [1.0 - ts2, -ts2]]
    }

    /// Solves Theta [b11, b22]^T = [p, s]^T. The determinant exceeds 1/2
    /// whenever |gamma| <= k_p and the Lame constraints hold; the guard only
    /// fires on inadmissible inputs.
    pub fn solve(&self, p: Complex64, s: Complex64) -> Result<(Complex64, Complex64)> {
        if self.det <= 0.5 {
            return Err(Error::ThetaSingular { det: self.det });
        }
        let tp2 = self.theta_p * self.theta_p;
        let ts2 = self.theta_s * self.theta_s;
        let b11 = (-ts2 * p + (1.0 - tp2) * s) / self.det;
        let b22 = (-(1.0 - ts2) * p + tp2 * s) / self.det;
        Ok((b11, b22))
    }
}

/// Supplies correlation matrices of both elastic branches at requested
/// direction pairs; implemented by the analytic pathway and by Monte Carlo
/// ensembles.
pub trait ElasticCorrelationSource {
    fn dim(&self) -> usize;
    fn p_corr(&self, xhat: &Vec3, yhat: &Vec3) -> Result<CMat>;
    fn s_corr(&self, xhat: &Vec3, yhat: &Vec3) -> Result<CMat>;
}

/// Analytic elastic source backed by a sigma_hat evaluator.
pub struct AnalyticElasticSource<'a> {
    pub sigma_hat: &'a dyn crate::sigma_hat::SigmaHatMatrix,
    pub k: f64,
    pub lambda: f64,
    pub mu: f64,
    pub m: f64,
}

impl ElasticCorrelationSource for AnalyticElasticSource<'_> {
    fn dim(&self) -> usize {
        self.sigma_hat.dim()
    }

    fn p_corr(&self, xhat: &Vec3, yhat: &Vec3) -> Result<CMat> {
        crate::correlation::analytic_correlation_elastic(
            self.sigma_hat,
            self.k,
            self.lambda,
            self.mu,
            self.m,
            *xhat,
            *yhat,
            crate::correlation::ElasticBranch::P,
        )?
        .value
        .matrix()
    }

    fn s_corr(&self, xhat: &Vec3, yhat: &Vec3) -> Result<CMat> {
        crate::correlation::analytic_correlation_elastic(
            self.sigma_hat,
            self.k,
            self.lambda,
            self.mu,
            self.m,
            *xhat,
            *yhat,
            crate::correlation::ElasticBranch::S,
        )?
        .value
        .matrix()
    }
}

/// Threshold below which |gamma| is treated as zero and the antipodal
/// canonical-basis route is used instead of the Theta system.
pub const ELASTIC_GAMMA_ZERO_FRACTION: f64 = 1e-8;

/// Recovers the trace of the coefficient matrix, Tr sigma_hat(gamma), from
/// p- and s-branch correlations. Requires a symmetric planted strength and
/// |gamma| <= k_p.
pub fn recover_trace_hat_elastic(
    source: &dyn ElasticCorrelationSource,
    gamma: &Vec3,
    k: f64,
    lambda: f64,
    mu: f64,
    m: f64,
) -> Result<Complex64> {
    let d = source.dim();
    let waves = ElasticWavenumbers::new(k, lambda, mu)?;
    let g = norm(gamma);
    if g > waves.k_p {
        return Err(Error::FrequencyTooHigh {
            gamma_norm: g,
            limit: waves.k_p,
        });
    }
    let df = d as f64;
    let scale_p = beta_d(d) * beta_d(d) * waves.c_p.powf(df + 2.0 - m) * k.powf(df - 3.0 - m);
    let scale_s = beta_d(d) * beta_d(d) * waves.c_s.powf(df + 2.0 - m) * k.powf(df - 3.0 - m);

    if g < ELASTIC_GAMMA_ZERO_FRACTION * waves.k_p {
        // gamma = 0: antipodal probes along the canonical axes give the
        // diagonal entries directly.
        let mut trace = Complex64::new(0.0, 0.0);
        for i in 0..d {
            let e = basis(i);
            let corr = source.p_corr(&e, &neg(&e))?;
            trace += corr.a[i][i] / scale_p;
        }
        return Ok(trace);
    }

    let ghat = scale(gamma, 1.0 / g);
    let nu1 = orthogonal_unit(gamma, d);
    // Compressional probe.
    let sq_p = (4.0 * waves.k_p * waves.k_p - g * g).max(0.0).sqrt();
    let xhat_p = scale(&add(gamma, &scale(&nu1, sq_p)), 1.0 / (2.0 * waves.k_p));
    let yhat_p = scale(&sub(gamma, &scale(&nu1, sq_p)), 1.0 / (2.0 * waves.k_p));
    let p_probe = source.p_corr(&xhat_p, &yhat_p)?.quad_form(&xhat_p, &yhat_p) / scale_p;
    // Shear probe through the rho vectors orthogonal to xhat_s, yhat_s.
    let sq_s = (4.0 * waves.k_s * waves.k_s - g * g).max(0.0).sqrt();
    let xhat_s = scale(&add(gamma, &scale(&nu1, sq_s)), 1.0 / (2.0 * waves.k_s));
    let yhat_s = scale(&sub(gamma, &scale(&nu1, sq_s)), 1.0 / (2.0 * waves.k_s));
    let rho1 = scale(
        &sub(&scale(gamma, sq_s), &scale(&nu1, g * g)),
        1.0 / (2.0 * waves.k_s * g),
    );
    let rho2 = scale(
        &add(&scale(gamma, sq_s), &scale(&nu1, g * g)),
        1.0 / (2.0 * waves.k_s * g),
    );
    let s_matrix = source.s_corr(&xhat_s, &yhat_s)?;
    let s_probe = s_matrix.quad_form(&rho1, &rho2) / scale_s;

    let theta = ThetaSystem::new(g, k, lambda, mu)?;
    let (b11, b22) = theta.solve(p_probe, s_probe)?;
    let mut trace = b11 + b22;
    if d == 3 {
        let nu2 = cross(&ghat, &nu1);
        trace += s_matrix.quad_form(&nu2, &nu2) / scale_s;
    }
    Ok(trace)
}

/// Low-frequency Fourier coefficients on a uniform Cartesian gamma grid
/// restricted to |gamma| <= cutoff.
#[derive(Debug, Clone)]
pub struct FourierCoefficientGrid {
    pub d: usize,
    pub spacing: f64,
    pub cutoff: f64,
    nodes: Vec<[i64; 3]>,
    values: Vec<Complex64>,
}

impl FourierCoefficientGrid {
    /// Builds the node list |spacing * p| <= cutoff with zero values.
    pub fn new(d: usize, spacing: f64, cutoff: f64) -> Result<Self> {
        if !(spacing > 0.0 && cutoff >= 0.0) {
            return Err(Error::InvalidInput(
                "coefficient grid needs spacing > 0 and cutoff >= 0".into(),
            ));
        }
        let max_idx = (cutoff / spacing).floor() as i64;
        let mut nodes = Vec::new();
        let r2 = (cutoff / spacing) * (cutoff / spacing);
        if d == 2 {
            for i in -max_idx..=max_idx {
                for j in -max_idx..=max_idx {
                    if (i * i + j * j) as f64 <= r2 + 1e-9 {
                        nodes.push([i, j, 0]);
                    }
                }
            }
        } else {
            for i in -max_idx..=max_idx {
                for j in -max_idx..=max_idx {
                    for l in -max_idx..=max_idx {
                        if (i * i + j * j + l * l) as f64 <= r2 + 1e-9 {
                            nodes.push([i, j, l]);
                        }
                    }
                }
            }
        }
        let count = nodes.len();
        Ok(Self {
            d,
            spacing,
            cutoff,
            nodes,
            values: vec![Complex64::new(0.0, 0.0); count],
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn gamma(&self, i: usize) -> Vec3 {
        let p = self.nodes[i];
        [
            self.spacing * p[0] as f64,
            self.spacing * p[1] as f64,
            self.spacing * p[2] as f64,
        ]
    }

    pub fn value(&self, i: usize) -> Complex64 {
        self.values[i]
    }

    pub fn set(&mut self, i: usize, v: Complex64) {
        self.values[i] = v;
    }

    /// Fills every node from an evaluator, in parallel.
    pub fn fill(&mut self, eval: impl Fn(&Vec3) -> Result<Complex64> + Sync + Send) -> Result<()> {
        let gammas: Vec<Vec3> = (0..self.len()).map(|i| self.gamma(i)).collect();
        let values = par::map_indexed(self.len(), |i| eval(&gammas[i]));
        self.values = values.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(())
    }

    /// Enforces value(-gamma) = conj(value(gamma)) by averaging each pair.
    pub fn hermitian_symmetrize(&mut self) {
        let index_of = |p: &[i64; 3]| -> Option<usize> {
            self.nodes.iter().position(|q| q == p)
        };
        // Node lists are small enough that a linear partner scan per node is
        // acceptable; symmetrization happens once per reconstruction.
        let mut done = vec![false; self.len()];
        for i in 0..self.len() {
            if done[i] {
                continue;
            }
            let p = self.nodes[i];
            let neg_p = [-p[0], -p[1], -p[2]];
            if let Some(j) = index_of(&neg_p) {
                let avg = 0.5 * (self.values[i] + self.values[j].conj());
                self.values[i] = avg;
                self.values[j] = avg.conj();
                done[i] = true;
                done[j] = true;
            }
        }
    }
}

/// Recovered strength with its synthesis parameters and optional error
/// metrics against a planted truth.
#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub grid: crate::grid::SpatialGrid,
    pub values: Vec<f64>,
    pub cutoff: f64,
    pub k: f64,
    pub sup_error: Option<f64>,
    pub l1_error: Option<f64>,
}

/// Budget on the imaginary residue of the synthesis relative to the real
/// amplitude.
pub const HERMITIAN_RESIDUE_BUDGET: f64 = 1e-10;

/// Riemann-sum inverse Fourier synthesis over the coefficient grid:
/// sigma_rec(x) = (2 pi)^{-d} sum_{|gamma| <= rho} e^{i gamma.x} value(gamma) dgamma^d.
pub fn inverse_fourier_cutoff(
    coeffs: &FourierCoefficientGrid,
    out_grid: &crate::grid::SpatialGrid,
    k: f64,
) -> Result<ReconstructionResult> {
    if out_grid.dim() != coeffs.d {
        return Err(Error::DimensionMismatch {
            expected: coeffs.d,
            got: out_grid.dim(),
        });
    }
    let cell = coeffs.spacing.powi(coeffs.d as i32);
    let pref = cell / (2.0 * std::f64::consts::PI).powi(coeffs.d as i32);
    let gammas: Vec<Vec3> = (0..coeffs.len()).map(|i| coeffs.gamma(i)).collect();
    let values = coeffs.values.clone();
    let complex_field: Vec<Complex64> = par::map_indexed(out_grid.len(), |idx| {
        let x = out_grid.node(idx);
        let mut acc = Complex64::new(0.0, 0.0);
        for (gamma, v) in gammas.iter().zip(&values) {
            acc += v * Complex64::from_polar(1.0, dot(gamma, &x));
        }
        acc * pref
    });
    let amplitude = complex_field
        .iter()
        .fold(0.0_f64, |a, z| a.max(z.norm()));
    let residue = complex_field.iter().fold(0.0_f64, |a, z| a.max(z.im.abs()));
    if amplitude > 0.0 && residue > HERMITIAN_RESIDUE_BUDGET * amplitude {
        return Err(Error::NonHermitianInput {
            residue: residue / amplitude,
            budget: HERMITIAN_RESIDUE_BUDGET,
        });
    }
    Ok(ReconstructionResult {
        grid: *out_grid,
        values: complex_field.iter().map(|z| z.re).collect(),
        cutoff: coeffs.cutoff,
        k,
        sup_error: None,
        l1_error: None,
    })
}

impl ReconstructionResult {
    /// Fills the error metrics against a planted scalar strength on the same
    /// grid.
    pub fn compare_with(&mut self, planted: &StrengthField) -> Result<()> {
        let truth = planted.scalar_values()?;
        if planted.grid != self.grid {
            return Err(Error::InvalidInput(
                "planted strength lives on a different grid".into(),
            ));
        }
        let mut sup = 0.0_f64;
        let mut l1 = 0.0_f64;
        for (r, t) in self.values.iter().zip(truth) {
            let e = (r - t).abs();
            sup = sup.max(e);
            l1 += e;
        }
        self.sup_error = Some(sup);
        self.l1_error = Some(l1 * self.grid.cell_volume());
        Ok(())
    }
}

/// One row of the stability probe table.
#[derive(Debug, Clone, Copy)]
pub struct ProbeRow {
    pub k: f64,
    pub m_stat: f64,
    /// k^{d/s + m + 4n - d - 1} (polyharmonic), or the model's analogue.
    pub k_power: f64,
    /// ||sigma||_inf / (k_power * M(k)), reported for boundedness inspection.
    pub ratio: f64,
    /// Left side of the L1 remark bound, ||sigma||_1 (polyharmonic only).
    pub l1_lhs: Option<f64>,
    /// Right side (2 n^2 / |beta_d|^2) k^{4n+m-d-1} M(k) (polyharmonic only).
    pub l1_rhs: Option<f64>,
    pub l1_ok: Option<bool>,
    /// Theory cutoff rho = k^{1/s}.
    pub theory_cutoff: f64,
    /// Whether s clears the theorem's floor for this model.
    pub s_meets_floor: bool,
}

/// Stability probe for the polyharmonic model. `sup_of_k` supplies M(k) from
/// either pathway.
pub fn stability_probe_poly(
    sigma: &StrengthField,
    n: usize,
    m: f64,
    s: u32,
    ks: &[f64],
    sup_of_k: impl Fn(f64) -> Result<SupStatistic>,
) -> Result<Vec<ProbeRow>> {
    let d = sigma.grid.dim();
    let df = d as f64;
    let nf = n as f64;
    let sf = s as f64;
    let beta_sq = beta_d(d).norm_sqr();
    let sup_norm = sigma.sup_norm();
    let l1 = sigma.l1_norm();
    let floor = (df / 4.0 + 2.0 * nf - 1.0).max(df);
    ks.iter()
        .map(|&k| {
            let stat = sup_of_k(k)?;
            if stat.model != SupModel::Polyharmonic {
                return Err(Error::InvalidInput("expected a polyharmonic statistic".into()));
            }
            let k_power = k.powf(df / sf + m + 4.0 * nf - df - 1.0);
            let l1_rhs = 2.0 * nf * nf / beta_sq * k.powf(4.0 * nf + m - df - 1.0) * stat.value;
            Ok(ProbeRow {
                k,
                m_stat: stat.value,
                k_power,
                ratio: sup_norm / (k_power * stat.value),
                l1_lhs: Some(l1),
                l1_rhs: Some(l1_rhs),
                l1_ok: Some(l1 <= l1_rhs * (1.0 + 1e-12)),
                theory_cutoff: k.powf(1.0 / sf),
                s_meets_floor: sf > floor,
            })
        })
        .collect()
}

/// Stability probe rows for the electromagnetic and elastic models; the L1
/// remark is specific to the polyharmonic case and stays empty here.
pub fn stability_probe_matrix(
    sigma: &StrengthField,
    model: SupModel,
    m: f64,
    s: u32,
    ks: &[f64],
    sup_of_k: impl Fn(f64) -> Result<SupStatistic>,
) -> Result<Vec<ProbeRow>> {
    let d = sigma.grid.dim();
    let df = d as f64;
    let sf = s as f64;
    let (norm_used, floor) = match model {
        SupModel::Electromagnetic => (sigma.sup_norm(), 3.0),
        SupModel::Elastic => {
            let values = sigma.matrix_values()?;
            let trace_sup = values.iter().fold(0.0_f64, |a, mm| a.max(mm.trace().abs()));
            (trace_sup, df)
        }
        SupModel::Polyharmonic => {
            return Err(Error::InvalidInput(
                "use stability_probe_poly for the polyharmonic model".into(),
            ))
        }
    };
    ks.iter()
        .map(|&k| {
            let stat = sup_of_k(k)?;
            let exponent = match model {
                SupModel::Electromagnetic => 3.0 / sf + m - 2.0,
                _ => df / sf + m - df + 3.0,
            };
            let k_power = k.powf(exponent);
            Ok(ProbeRow {
                k,
                m_stat: stat.value,
                k_power,
                ratio: norm_used / (k_power * stat.value),
                l1_lhs: None,
                l1_rhs: None,
                l1_ok: None,
                theory_cutoff: k.powf(1.0 / sf),
                s_meets_floor: sf > floor,
            })
        })
        .collect()
}
