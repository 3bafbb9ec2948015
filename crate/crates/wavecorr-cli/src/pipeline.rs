//! Experiment pipeline: sample -> far field -> correlate -> recover ->
//! reconstruct -> probe, with every artifact written to the output
//! directory and recorded in the manifest.
//!
//! All randomness flows from `run.base_seed`: the realization with index r
//! at the i-th wavenumber uses seed derive(base_seed, (i << 32) | r), so
//! reruns of an identical config are bit-identical.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use wavecorr::correlation::{
    analytic_correlation_elastic, analytic_correlation_em, analytic_correlation_poly,
    empirical_residual_budget_poly, mc_correlation, mc_correlation_matrix, pair_grid,
    sandwich_check_elastic, sandwich_check_em, sandwich_check_poly, sup_statistic,
    CorrelationRecord, ElasticBranch, SandwichReport, SupModel,
};
use wavecorr::farfield::{
    direction_grid, elastic_farfield, em_farfield, poly_farfield, ElasticWavenumbers,
};
use wavecorr::io::{fmt_f64, save_correlations_csv, save_reconstruction, save_strength, CsvWriter};
use wavecorr::linalg::{basis, neg, Vec3};
use wavecorr::reconstruction::{
    directions_for_gamma, inverse_fourier_cutoff, recover_sigma_hat_em, recover_sigma_hat_poly,
    recover_trace_hat_elastic, stability_probe_matrix, stability_probe_poly,
    AnalyticElasticSource, ElasticCorrelationSource, FourierCoefficientGrid, ProbeRow,
};
use wavecorr::rng::derive;
use wavecorr::sampler::{leray_project, FieldRealization, ScalarSampler, VectorSampler};
use wavecorr::sigma_hat::{QuadratureSigmaHat, QuadratureSigmaHatMatrix};
use wavecorr::{CheckedSourceSpec, WaveModel};

use crate::config::{CutoffPolicy, ExperimentPlan, PathwayConfig};
use crate::errors::{CliError, Result};
use crate::manifest::{config_hash, file_record, FileRecord, RunManifest, StageRecord};

pub struct RunOutput {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
}

struct StageClock {
    stages: Vec<StageRecord>,
    current: Option<(String, Instant)>,
}

impl StageClock {
    fn new() -> Self {
        Self { stages: Vec::new(), current: None }
    }

    fn start(&mut self, name: &str) {
        self.finish();
        self.current = Some((name.to_string(), Instant::now()));
    }

    fn finish(&mut self) {
        if let Some((name, t0)) = self.current.take() {
            self.stages.push(StageRecord {
                name,
                wall_ms: t0.elapsed().as_millis() as u64,
            });
        }
    }
}

fn cutoff_radius(policy: CutoffPolicy, k: f64, s: u32, model: &WaveModel) -> f64 {
    match policy {
        CutoffPolicy::TwoK => 2.0 * k,
        CutoffPolicy::KP => match model {
            WaveModel::Elastic { lambda, mu, .. } => {
                ElasticWavenumbers::new(k, *lambda, *mu).expect("validated").k_p
            }
            _ => 2.0 * k,
        },
        CutoffPolicy::Theory => k.powf(1.0 / s as f64),
        CutoffPolicy::Fixed(r) => {
            let max = match model {
                WaveModel::Elastic { lambda, mu, .. } => {
                    ElasticWavenumbers::new(k, *lambda, *mu).expect("validated").k_p
                }
                _ => 2.0 * k,
            };
            r.min(max)
        }
    }
}

/// Direction set for the pair grid; elastic runs include the canonical axes
/// so the trace lower bound's probes are present.
fn directions_for(model: &WaveModel, count: usize) -> Vec<Vec3> {
    let d = model.dim();
    let mut dirs = direction_grid(d, count);
    if matches!(model, WaveModel::Elastic { .. }) {
        for i in 0..d {
            dirs.push(basis(i));
            dirs.push(neg(&basis(i)));
        }
    }
    dirs
}


/// Deduplicates the directions appearing in a pair list (bitwise identity)
/// and rewrites the pairs as index pairs into the unique set.
fn unique_pair_dirs(pairs: &[(Vec3, Vec3)]) -> (Vec<Vec3>, Vec<(usize, usize)>) {
    use std::collections::HashMap;
    let mut dirs: Vec<Vec3> = Vec::new();
    let mut index: HashMap<[u64; 3], usize> = HashMap::new();
    let mut intern = |v: &Vec3, dirs: &mut Vec<Vec3>| -> usize {
        let key = [v[0].to_bits(), v[1].to_bits(), v[2].to_bits()];
        *index.entry(key).or_insert_with(|| {
            dirs.push(*v);
            dirs.len() - 1
        })
    };
    let idx_pairs = pairs
        .iter()
        .map(|(x, y)| {
            let xi = intern(x, &mut dirs);
            let yi = intern(y, &mut dirs);
            (xi, yi)
        })
        .collect();
    (dirs, idx_pairs)
}

fn realization_seed(base: u64, k_index: usize, r: usize) -> u64 {
    derive(base, ((k_index as u64) << 32) | r as u64)
}

fn map_realizations<T: Send>(
    n: usize,
    f: impl Fn(usize) -> T + Sync + Send,
) -> Vec<T> {
    wavecorr::par::map_indexed(n, f)
}

/// Monte Carlo correlation records for the polyharmonic model at one k.
fn mc_records_poly(
    spec: &CheckedSourceSpec,
    n_order: usize,
    k: f64,
    k_index: usize,
    pairs: &[(Vec3, Vec3)],
    realizations: usize,
    base_seed: u64,
    farfield_dump: Option<&Path>,
) -> Result<Vec<CorrelationRecord>> {
    let sampler = ScalarSampler::new(spec).map_err(CliError::stage("sample"))?;
    let (dirs, idx_pairs) = unique_pair_dirs(pairs);
    let samples: Vec<Vec<wavecorr::farfield::FarFieldSample>> =
        map_realizations(realizations, |r| {
            let f = sampler.sample(realization_seed(base_seed, k_index, r));
            poly_farfield(&f, k, n_order, &dirs).expect("validated inputs")
        });
    if let Some(base) = farfield_dump {
        let seeds: Vec<u64> = (0..realizations)
            .map(|r| realization_seed(base_seed, k_index, r))
            .collect();
        wavecorr::io::save_farfield_ensemble(base, "polyharmonic", k, &seeds, &samples)
            .map_err(CliError::stage("persist"))?;
    }
    let ensemble: Vec<Vec<Complex64>> = samples
        .iter()
        .map(|row| {
            row.iter()
                .map(|s| s.scalar_value().expect("scalar model"))
                .collect()
        })
        .collect();
    let by_dir: Vec<Vec<Complex64>> = (0..dirs.len())
        .map(|d| ensemble.iter().map(|row| row[d]).collect())
        .collect();
    idx_pairs
        .iter()
        .map(|&(xi, yi)| {
            mc_correlation(&by_dir[xi], &by_dir[yi], dirs[xi], dirs[yi], k)
                .map_err(CliError::stage("correlate"))
        })
        .collect()
}

enum VectorModelKind {
    Em { leray: bool },
    Elastic { lambda: f64, mu: f64, branch: ElasticBranch },
}

/// Monte Carlo correlation records for the vector models at one k.
fn mc_records_vector(
    spec: &CheckedSourceSpec,
    kind: &VectorModelKind,
    k: f64,
    k_index: usize,
    pairs: &[(Vec3, Vec3)],
    realizations: usize,
    base_seed: u64,
) -> Result<Vec<CorrelationRecord>> {
    let sampler = VectorSampler::new(spec).map_err(CliError::stage("sample"))?;
    let d = spec.model().dim();
    let (dirs, idx_pairs) = unique_pair_dirs(pairs);
    let ensemble: Vec<Vec<[Complex64; 3]>> = map_realizations(realizations, |r| {
        let mut f: FieldRealization = sampler.sample(realization_seed(base_seed, k_index, r));
        let values = match kind {
            VectorModelKind::Em { leray } => {
                if *leray {
                    f = leray_project(&f).expect("3-d vector field");
                }
                em_farfield(&f, k, &dirs).expect("validated inputs")
            }
            VectorModelKind::Elastic { lambda, mu, branch } => {
                let both = elastic_farfield(&f, k, *lambda, *mu, &dirs).expect("validated");
                both.into_iter()
                    .map(|(p, s)| match branch {
                        ElasticBranch::P => p,
                        ElasticBranch::S => s,
                    })
                    .collect()
            }
        };
        values
            .iter()
            .map(|s| s.vector_value().expect("vector model"))
            .collect()
    });
    let by_dir: Vec<Vec<[Complex64; 3]>> = (0..dirs.len())
        .map(|di| ensemble.iter().map(|row| row[di]).collect())
        .collect();
    idx_pairs
        .iter()
        .map(|&(xi, yi)| {
            mc_correlation_matrix(&by_dir[xi], &by_dir[yi], d, dirs[xi], dirs[yi], k)
                .map_err(CliError::stage("correlate"))
        })
        .collect()
}

/// Monte Carlo elastic source: correlation matrices at arbitrary pairs from
/// a dedicated ensemble evaluated lazily per probe pair.
struct McElasticSource<'a> {
    sampler: &'a VectorSampler,
    k: f64,
    lambda: f64,
    mu: f64,
    realizations: usize,
    base_seed: u64,
    k_index: usize,
    d: usize,
}

impl McElasticSource<'_> {
    fn corr(&self, xhat: &Vec3, yhat: &Vec3, branch: ElasticBranch) -> wavecorr::Result<wavecorr::linalg::CMat> {
        let dirs = [*xhat, *yhat];
        let ensemble: Vec<Vec<[Complex64; 3]>> = map_realizations(self.realizations, |r| {
            let f = self
                .sampler
                .sample(realization_seed(self.base_seed, self.k_index, r));
            elastic_farfield(&f, self.k, self.lambda, self.mu, &dirs)
                .expect("validated")
                .into_iter()
                .map(|(p, s)| match branch {
                    ElasticBranch::P => p.vector_value().expect("vector"),
                    ElasticBranch::S => s.vector_value().expect("vector"),
                })
                .collect()
        });
        let at_x: Vec<[Complex64; 3]> = ensemble.iter().map(|row| row[0]).collect();
        let at_y: Vec<[Complex64; 3]> = ensemble.iter().map(|row| row[1]).collect();
        Ok(mc_correlation_matrix(&at_x, &at_y, self.d, *xhat, *yhat, self.k)?
            .value
            .matrix()?)
    }
}

impl ElasticCorrelationSource for McElasticSource<'_> {
    fn dim(&self) -> usize {
        self.d
    }

    fn p_corr(&self, xhat: &Vec3, yhat: &Vec3) -> wavecorr::Result<wavecorr::linalg::CMat> {
        self.corr(xhat, yhat, ElasticBranch::P)
    }

    fn s_corr(&self, xhat: &Vec3, yhat: &Vec3) -> wavecorr::Result<wavecorr::linalg::CMat> {
        self.corr(xhat, yhat, ElasticBranch::S)
    }
}

fn write_sup_csv(
    path: &Path,
    rows: &[(f64, f64, SandwichReport, f64)],
) -> Result<()> {
    let mut w = CsvWriter::create(path, "k,m_stat,lower,upper,within,residual_budget")
        .map_err(CliError::stage("persist"))?;
    for (k, m, report, budget) in rows {
        w.row(&[
            fmt_f64(*k),
            fmt_f64(*m),
            fmt_f64(report.lower),
            report.upper.map(fmt_f64).unwrap_or_default(),
            report.within.to_string(),
            fmt_f64(*budget),
        ])
        .map_err(CliError::stage("persist"))?;
    }
    Ok(())
}

fn write_probe_csv(path: &Path, rows: &[ProbeRow]) -> Result<()> {
    let mut w = CsvWriter::create(
        path,
        "k,m_stat,k_power,ratio,l1_lhs,l1_rhs,l1_ok,theory_cutoff,s_meets_floor",
    )
    .map_err(CliError::stage("persist"))?;
    for r in rows {
        w.row(&[
            fmt_f64(r.k),
            fmt_f64(r.m_stat),
            fmt_f64(r.k_power),
            fmt_f64(r.ratio),
            r.l1_lhs.map(fmt_f64).unwrap_or_default(),
            r.l1_rhs.map(fmt_f64).unwrap_or_default(),
            r.l1_ok.map(|b| b.to_string()).unwrap_or_default(),
            fmt_f64(r.theory_cutoff),
            r.s_meets_floor.to_string(),
        ])
        .map_err(CliError::stage("persist"))?;
    }
    Ok(())
}

fn write_sigma_hat_csv(path: &Path, coeffs: &FourierCoefficientGrid) -> Result<()> {
    let mut w = CsvWriter::create(path, "gamma0,gamma1,gamma2,re,im")
        .map_err(CliError::stage("persist"))?;
    for i in 0..coeffs.len() {
        let g = coeffs.gamma(i);
        let v = coeffs.value(i);
        w.row(&[
            fmt_f64(g[0]),
            fmt_f64(g[1]),
            fmt_f64(g[2]),
            fmt_f64(v.re),
            fmt_f64(v.im),
        ])
        .map_err(CliError::stage("persist"))?;
    }
    Ok(())
}

pub fn run(plan: &ExperimentPlan, config_path: &Path) -> Result<RunOutput> {
    let out = &plan.config.output_dir;
    let out = if out.is_absolute() {
        out.clone()
    } else {
        config_path
            .parent()
            .unwrap_or(Path::new("."))
            .join(out)
    };
    std::fs::create_dir_all(&out).map_err(|e| CliError::StageFailure {
        stage: "setup",
        message: format!("create {out:?}: {e}"),
    })?;

    let mut clock = StageClock::new();
    let mut files: Vec<FileRecord> = Vec::new();
    let add_file = |path: &Path, files: &mut Vec<FileRecord>| -> Result<()> {
        files.push(file_record(&out, path)?);
        Ok(())
    };

    // Planted strength.
    clock.start("persist-strength");
    let strength_base = out.join("strength");
    save_strength(&strength_base, plan.spec.strength(), Some(plan.spec.spec()))
        .map_err(CliError::stage("persist"))?;
    add_file(&strength_base.with_extension("f64"), &mut files)?;
    add_file(&strength_base.with_extension("json"), &mut files)?;

    let model = *plan.spec.model();
    let d = model.dim();
    let m = plan.spec.m();
    let s = plan.spec.s();
    let dirs = directions_for(&model, plan.config.run.directions);
    let pairs = pair_grid(&dirs, &[1, dirs.len() / 4]);
    let ks = plan.config.run.ks.clone();

    let strength = plan.spec.strength().clone();
    let scalar_hat = if model.wants_matrix_strength() {
        None
    } else {
        Some(QuadratureSigmaHat::new(&strength).map_err(CliError::stage("sigma-hat"))?)
    };
    let matrix_hat = if model.wants_matrix_strength() {
        Some(QuadratureSigmaHatMatrix::new(&strength).map_err(CliError::stage("sigma-hat"))?)
    } else {
        None
    };

    let mut sup_rows: Vec<(f64, f64, SandwichReport, f64)> = Vec::new();
    let mut m_by_k: Vec<(f64, f64)> = Vec::new();

    for (k_index, &k) in ks.iter().enumerate() {
        clock.start(&format!("correlate-k{k}"));
        // Correlation records over the pair grid (single branch set for
        // poly/EM; both branches for elastic).
        let (records, sup_model) = match (&model, plan.pathway) {
            (WaveModel::Polyharmonic { n, .. }, PathwayConfig::Analytic) => {
                let sh = scalar_hat.as_ref().unwrap();
                let recs = pairs
                    .iter()
                    .map(|(x, y)| {
                        analytic_correlation_poly(sh, k, *n, d, m, *x, *y)
                            .map_err(CliError::stage("correlate"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                (recs, SupModel::Polyharmonic)
            }
            (WaveModel::Polyharmonic { n, .. }, PathwayConfig::MonteCarlo) => {
                let dump_base = out.join(format!("farfield-k{k}"));
                let recs = mc_records_poly(
                    &plan.spec,
                    *n,
                    k,
                    k_index,
                    &pairs,
                    plan.realizations,
                    plan.base_seed,
                    plan.config.run.save_farfields.then_some(dump_base.as_path()),
                )?;
                if plan.config.run.save_farfields {
                    add_file(&dump_base.with_extension("csv"), &mut files)?;
                    add_file(&dump_base.with_extension("json"), &mut files)?;
                }
                (recs, SupModel::Polyharmonic)
            }
            (WaveModel::Electromagnetic, PathwayConfig::Analytic) => {
                let sh = matrix_hat.as_ref().unwrap();
                let recs = pairs
                    .iter()
                    .map(|(x, y)| {
                        analytic_correlation_em(sh, k, m, *x, *y)
                            .map_err(CliError::stage("correlate"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                (recs, SupModel::Electromagnetic)
            }
            (WaveModel::Electromagnetic, PathwayConfig::MonteCarlo) => (
                mc_records_vector(
                    &plan.spec,
                    &VectorModelKind::Em { leray: plan.config.run.leray },
                    k,
                    k_index,
                    &pairs,
                    plan.realizations,
                    plan.base_seed,
                )?,
                SupModel::Electromagnetic,
            ),
            (WaveModel::Elastic { lambda, mu, .. }, PathwayConfig::Analytic) => {
                let sh = matrix_hat.as_ref().unwrap();
                let mut recs = Vec::with_capacity(2 * pairs.len());
                for branch in [ElasticBranch::P, ElasticBranch::S] {
                    for (x, y) in &pairs {
                        recs.push(
                            analytic_correlation_elastic(sh, k, *lambda, *mu, m, *x, *y, branch)
                                .map_err(CliError::stage("correlate"))?,
                        );
                    }
                }
                (recs, SupModel::Elastic)
            }
            (WaveModel::Elastic { lambda, mu, .. }, PathwayConfig::MonteCarlo) => {
                let mut recs = mc_records_vector(
                    &plan.spec,
                    &VectorModelKind::Elastic {
                        lambda: *lambda,
                        mu: *mu,
                        branch: ElasticBranch::P,
                    },
                    k,
                    k_index,
                    &pairs,
                    plan.realizations,
                    plan.base_seed,
                )?;
                recs.extend(mc_records_vector(
                    &plan.spec,
                    &VectorModelKind::Elastic {
                        lambda: *lambda,
                        mu: *mu,
                        branch: ElasticBranch::S,
                    },
                    k,
                    k_index,
                    &pairs,
                    plan.realizations,
                    plan.base_seed,
                )?);
                (recs, SupModel::Elastic)
            }
        };
        let corr_path = out.join(format!("correlations-k{k}.csv"));
        save_correlations_csv(&corr_path, &records).map_err(CliError::stage("persist"))?;
        add_file(&corr_path, &mut files)?;

        // Sup statistic and sandwich margins; on the Monte Carlo pathway the
        // residual budget is estimated empirically from |MC - analytic|.
        let stat = sup_statistic(&records, plan.config.run.directions, sup_model)
            .map_err(CliError::stage("sup"))?;
        m_by_k.push((k, stat.value));
        let budget = if plan.pathway == PathwayConfig::MonteCarlo {
            match (&model, scalar_hat.as_ref()) {
                (WaveModel::Polyharmonic { n, .. }, Some(sh)) => {
                    let deviations: Vec<(f64, f64)> = records
                        .iter()
                        .map(|r| {
                            let ana = analytic_correlation_poly(sh, k, *n, d, m, r.xhat, r.yhat)
                                .expect("k > 1")
                                .value
                                .scalar()
                                .expect("scalar");
                            (k, (r.value.scalar().expect("scalar") - ana).norm())
                        })
                        .collect();
                    empirical_residual_budget_poly(&deviations, *n, d, m)
                }
                _ => 0.0,
            }
        } else {
            0.0
        };
        let report = match &model {
            WaveModel::Polyharmonic { n, .. } => {
                sandwich_check_poly(&stat, &strength, *n, m, budget)
                    .map_err(CliError::stage("sandwich"))?
            }
            WaveModel::Electromagnetic => sandwich_check_em(&stat, &strength, m, 0.0)
                .map_err(CliError::stage("sandwich"))?,
            WaveModel::Elastic { lambda, mu, .. } => {
                sandwich_check_elastic(&stat, &strength, *lambda, *mu, m, 0.0)
                    .map_err(CliError::stage("sandwich"))?
            }
        };
        sup_rows.push((k, stat.value, report, budget));

        // Fourier-coefficient recovery on the gamma grid.
        clock.start(&format!("recover-k{k}"));
        let rho = cutoff_radius(plan.cutoff, k, s, &model);
        let spacing = std::f64::consts::PI / strength.grid.box_width();
        let mut coeffs =
            FourierCoefficientGrid::new(d, spacing, rho).map_err(CliError::stage("recover"))?;
        match &model {
            WaveModel::Polyharmonic { n, .. } => {
                let fill: Box<dyn Fn(&Vec3) -> wavecorr::Result<Complex64> + Sync + Send> =
                    match plan.pathway {
                        PathwayConfig::Analytic => {
                            let sh = scalar_hat.as_ref().unwrap();
                            let n = *n;
                            Box::new(move |gamma: &Vec3| {
                                let pair = directions_for_gamma(gamma, k, d)?;
                                let f = analytic_correlation_poly(
                                    sh, k, n, d, m, pair.xhat, pair.yhat,
                                )?
                                .value
                                .scalar()?;
                                recover_sigma_hat_poly(f, gamma, k, n, d, m)
                            })
                        }
                        PathwayConfig::MonteCarlo => {
                            // Recover from the MC ensemble: one dedicated
                            // ensemble evaluated at the synthesized pair per
                            // gamma node would resample per node; instead the
                            // estimator reuses the planted-sigma analytic
                            // directions and estimates F there.
                            let spec = plan.spec.clone();
                            let n = *n;
                            let realizations = plan.realizations;
                            let base_seed = plan.base_seed;
                            let sampler = ScalarSampler::new(&spec)
                                .map_err(CliError::stage("sample"))?;
                            Box::new(move |gamma: &Vec3| {
                                let pair = directions_for_gamma(gamma, k, d)?;
                                let dirs2 = [pair.xhat, pair.yhat];
                                let ens: Vec<[Complex64; 2]> =
                                    map_realizations(realizations, |r| {
                                        let fr = sampler.sample(realization_seed(
                                            base_seed, k_index, r,
                                        ));
                                        let ff = poly_farfield(&fr, k, n, &dirs2)
                                            .expect("validated");
                                        [
                                            ff[0].scalar_value().expect("scalar"),
                                            ff[1].scalar_value().expect("scalar"),
                                        ]
                                    });
                                let at_x: Vec<Complex64> =
                                    ens.iter().map(|e| e[0]).collect();
                                let at_y: Vec<Complex64> =
                                    ens.iter().map(|e| e[1]).collect();
                                let rec = mc_correlation(
                                    &at_x, &at_y, pair.xhat, pair.yhat, k,
                                )?;
                                recover_sigma_hat_poly(
                                    rec.value.scalar()?,
                                    gamma,
                                    k,
                                    n,
                                    d,
                                    m,
                                )
                            })
                        }
                    };
                coeffs.fill(|g| fill(g)).map_err(CliError::stage("recover"))?;
            }
            WaveModel::Electromagnetic => {
                // Full matrix recovery: persist the matrix transform, carry
                // its trace into the scalar synthesis grid.
                let em_sampler = match plan.pathway {
                    PathwayConfig::MonteCarlo => Some(
                        VectorSampler::new(&plan.spec).map_err(CliError::stage("sample"))?,
                    ),
                    PathwayConfig::Analytic => None,
                };
                let em_csv = out.join(format!("sigma_hat_matrix-k{k}.csv"));
                let mut w = CsvWriter::create(
                    &em_csv,
                    "gamma0,gamma1,gamma2,entry_i,entry_j,re,im",
                )
                .map_err(CliError::stage("persist"))?;
                for i in 0..coeffs.len() {
                    let gamma = coeffs.gamma(i);
                    let pair = directions_for_gamma(&gamma, k, d)
                        .map_err(CliError::stage("recover"))?;
                    let corr = match (&em_sampler, matrix_hat.as_ref()) {
                        (Some(sampler), _) => {
                            let dirs2 = [pair.xhat, pair.yhat];
                            let leray = plan.config.run.leray;
                            let ens: Vec<[[Complex64; 3]; 2]> =
                                map_realizations(plan.realizations, |r| {
                                    let mut fr = sampler.sample(realization_seed(
                                        plan.base_seed,
                                        k_index,
                                        r,
                                    ));
                                    if leray {
                                        fr = leray_project(&fr).expect("3-d vector field");
                                    }
                                    let ff = em_farfield(&fr, k, &dirs2).expect("validated");
                                    [
                                        ff[0].vector_value().expect("vector"),
                                        ff[1].vector_value().expect("vector"),
                                    ]
                                });
                            let at_x: Vec<[Complex64; 3]> =
                                ens.iter().map(|e| e[0]).collect();
                            let at_y: Vec<[Complex64; 3]> =
                                ens.iter().map(|e| e[1]).collect();
                            mc_correlation_matrix(&at_x, &at_y, d, pair.xhat, pair.yhat, k)
                                .map_err(CliError::stage("recover"))?
                                .value
                                .matrix()
                                .map_err(CliError::stage("recover"))?
                        }
                        (None, Some(sh)) => {
                            analytic_correlation_em(sh, k, m, pair.xhat, pair.yhat)
                                .map_err(CliError::stage("recover"))?
                                .value
                                .matrix()
                                .map_err(CliError::stage("recover"))?
                        }
                        (None, None) => unreachable!("EM model always has a matrix strength"),
                    };
                    let rec = recover_sigma_hat_em(&corr, &gamma, k, m)
                        .map_err(CliError::stage("recover"))?;
                    for ei in 0..3 {
                        for ej in 0..3 {
                            w.row(&[
                                fmt_f64(gamma[0]),
                                fmt_f64(gamma[1]),
                                fmt_f64(gamma[2]),
                                ei.to_string(),
                                ej.to_string(),
                                fmt_f64(rec.a[ei][ej].re),
                                fmt_f64(rec.a[ei][ej].im),
                            ])
                            .map_err(CliError::stage("persist"))?;
                        }
                    }
                    coeffs.set(i, rec.trace());
                }
                add_file(&em_csv, &mut files)?;
            }
            WaveModel::Elastic { lambda, mu, .. } => {
                let lambda = *lambda;
                let mu = *mu;
                match plan.pathway {
                    PathwayConfig::Analytic => {
                        let sh = matrix_hat.as_ref().unwrap();
                        let source = AnalyticElasticSource { sigma_hat: sh, k, lambda, mu, m };
                        coeffs
                            .fill(|gamma| {
                                recover_trace_hat_elastic(&source, gamma, k, lambda, mu, m)
                            })
                            .map_err(CliError::stage("recover"))?;
                    }
                    PathwayConfig::MonteCarlo => {
                        let sampler = VectorSampler::new(&plan.spec)
                            .map_err(CliError::stage("sample"))?;
                        let source = McElasticSource {
                            sampler: &sampler,
                            k,
                            lambda,
                            mu,
                            realizations: plan.realizations,
                            base_seed: plan.base_seed,
                            k_index,
                            d,
                        };
                        coeffs
                            .fill(|gamma| {
                                recover_trace_hat_elastic(&source, gamma, k, lambda, mu, m)
                            })
                            .map_err(CliError::stage("recover"))?;
                    }
                }
            }
        }
        coeffs.hermitian_symmetrize();
        let hat_csv = out.join(format!("sigma_hat-k{k}.csv"));
        write_sigma_hat_csv(&hat_csv, &coeffs)?;
        add_file(&hat_csv, &mut files)?;

        if plan.config.run.reconstruct {
            clock.start(&format!("reconstruct-k{k}"));
            let mut rec = inverse_fourier_cutoff(&coeffs, &strength.grid, k)
                .map_err(CliError::stage("reconstruct"))?;
            if !model.wants_matrix_strength() {
                rec.compare_with(&strength).ok();
            }
            let rec_base = out.join(format!("reconstruction-k{k}"));
            save_reconstruction(&rec_base, &rec).map_err(CliError::stage("persist"))?;
            add_file(&rec_base.with_extension("f64"), &mut files)?;
            add_file(&rec_base.with_extension("json"), &mut files)?;
        }
    }

    // Far-field asymptotics of the planted strength as a deterministic
    // source (polyharmonic only).
    if !plan.config.run.asymptotics_radii.is_empty() {
        if let WaveModel::Polyharmonic { n, .. } = &model {
            clock.start("asymptotics");
            let field = FieldRealization::from_scalar_values(
                strength.grid,
                strength
                    .scalar_values()
                    .map_err(CliError::stage("asymptotics"))?
                    .to_vec(),
            )
            .map_err(CliError::stage("asymptotics"))?;
            let xhat = dirs[0];
            let mut rows = Vec::new();
            for &k in &ks {
                let res = wavecorr::green::asymptote_residual(
                    &field,
                    k,
                    *n,
                    &xhat,
                    &plan.config.run.asymptotics_radii,
                )
                .map_err(CliError::stage("asymptotics"))?;
                let u_inf = poly_farfield(&field, k, *n, &[xhat])
                    .map_err(CliError::stage("asymptotics"))?[0]
                    .scalar_value()
                    .map_err(CliError::stage("asymptotics"))?;
                for (radius, residual) in plan.config.run.asymptotics_radii.iter().zip(res) {
                    rows.push((k, *radius, residual, u_inf.norm()));
                }
            }
            let path = out.join("asymptotics.csv");
            wavecorr::io::save_asymptotics_csv(&path, &rows)
                .map_err(CliError::stage("persist"))?;
            add_file(&path, &mut files)?;
        }
    }

    // Sup statistics and sandwich margins.
    clock.start("persist-statistics");
    let sup_path = out.join("sup_statistic.csv");
    write_sup_csv(&sup_path, &sup_rows)?;
    add_file(&sup_path, &mut files)?;

    // Stability probe rows over all ks.
    let m_lookup = move |k: f64, m_by_k: &[(f64, f64)], model: SupModel| {
        let value = m_by_k
            .iter()
            .find(|(kk, _)| *kk == k)
            .map(|(_, v)| *v)
            .expect("probe k drawn from run.ks");
        Ok(wavecorr::correlation::SupStatistic {
            k,
            value,
            resolution: 0,
            model,
        })
    };
    let probe_rows = match &model {
        WaveModel::Polyharmonic { n, .. } => stability_probe_poly(
            &strength,
            *n,
            m,
            s,
            &ks,
            |k| m_lookup(k, &m_by_k, SupModel::Polyharmonic),
        )
        .map_err(CliError::stage("probe"))?,
        WaveModel::Electromagnetic => stability_probe_matrix(
            &strength,
            SupModel::Electromagnetic,
            m,
            s,
            &ks,
            |k| m_lookup(k, &m_by_k, SupModel::Electromagnetic),
        )
        .map_err(CliError::stage("probe"))?,
        WaveModel::Elastic { .. } => stability_probe_matrix(
            &strength,
            SupModel::Elastic,
            m,
            s,
            &ks,
            |k| m_lookup(k, &m_by_k, SupModel::Elastic),
        )
        .map_err(CliError::stage("probe"))?,
    };
    let probe_path = out.join("probe.csv");
    write_probe_csv(&probe_path, &probe_rows)?;
    add_file(&probe_path, &mut files)?;

    clock.finish();
    let manifest = RunManifest {
        schema_version: crate::manifest::MANIFEST_SCHEMA_VERSION,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash(&plan.config)?,
        stages: clock.stages,
        files,
    };
    let manifest_path = manifest.save(&out)?;
    Ok(RunOutput {
        manifest,
        manifest_path,
    })
}
