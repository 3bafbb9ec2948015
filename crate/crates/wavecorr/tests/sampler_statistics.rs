//! Statistical validation of the GMIG samplers against independent lattice
//! oracles: distribution shape, pairing covariance, far-field correlation
//! expectation, and the design budget that keeps the Monte Carlo acceptance
//! band attainable.

mod common;

use common::{plateau_strength, sample_moments, LatticeCorrelationOracle};
use num_complex::Complex64;
use wavecorr::correlation::{analytic_correlation_poly, mc_correlation};
use wavecorr::farfield::{poly_farfield, random_directions};
use wavecorr::grid::{GridFft, SpatialGrid};
use wavecorr::linalg::SymMat;
use wavecorr::params::{
    gaussian_bump_strength, matrix_bump_strength, validate_source, SourceSpec, WaveModel,
};
use wavecorr::sampler::{ScalarSampler, VectorSampler};
use wavecorr::sigma_hat::{QuadratureSigmaHat, QuadratureSigmaHatMatrix};

/// Monte Carlo far-field correlations agree with the exact lattice-model
/// expectation within noise on every direction pair.
#[test]
fn mc_correlation_matches_lattice_expectation() {
    let grid = SpatialGrid::standard(2, 64).unwrap();
    let k = 16.0;
    let m = 2.0;
    let sigma = plateau_strength(grid, 1.0);
    let spec = validate_source(
        WaveModel::polyharmonic(2, 1).unwrap(),
        SourceSpec { m, s: 3, strength: sigma.clone() },
    )
    .unwrap();
    let sampler = ScalarSampler::new(&spec).unwrap();
    let dirs = random_directions(2, 6, 42);
    let n = 3000usize;
    let ensemble: Vec<Vec<Complex64>> = wavecorr::par::map_indexed(n, |seed| {
        let f = sampler.sample(seed as u64);
        poly_farfield(&f, k, 1, &dirs)
            .unwrap()
            .iter()
            .map(|s| s.scalar_value().unwrap())
            .collect()
    });
    let by_dir: Vec<Vec<Complex64>> = (0..dirs.len())
        .map(|d| ensemble.iter().map(|row| row[d]).collect())
        .collect();
    let oracle = LatticeCorrelationOracle::new(&sigma, k, 1, m);
    for i in 0..dirs.len() {
        for j in (i + 1)..dirs.len() {
            let rec = mc_correlation(&by_dir[i], &by_dir[j], dirs[i], dirs[j], k).unwrap();
            let exact = oracle.correlation(&dirs[i], &dirs[j]);
            let dev = (rec.value.scalar().unwrap() - exact).norm() / rec.stderr;
            assert!(dev < 5.0, "pair ({i},{j}): {dev:.2} stderr from the oracle");
        }
    }
}

/// Design guard for the Monte Carlo acceptance band: the factorized
/// sampler's deterministic residual against the analytic r = 0 formula must
/// stay below 2.5 predicted standard errors at n = 4096 for the plateau
/// strength. Measured worst case 1.6 at |gamma| -> 0; narrow Gaussian bumps
/// would reach ~6 and are not usable for that test.
#[test]
fn sampler_bias_stays_within_mc_band_budget() {
    let grid = SpatialGrid::standard(2, 128).unwrap();
    let k = 16.0;
    let m = 2.0;
    let sigma = plateau_strength(grid, 1.0);
    let oracle = LatticeCorrelationOracle::new(&sigma, k, 1, m);
    let sh = QuadratureSigmaHat::new(&sigma).unwrap();
    let mut worst = 0.0_f64;
    for i in 0..=16 {
        let g = 2.0 * k * i as f64 / 16.0;
        let c = (g * g / (2.0 * k * k) - 1.0).clamp(-1.0, 1.0);
        let s = (1.0 - c * c).max(0.0).sqrt();
        let xhat = [1.0, 0.0, 0.0];
        let yhat = [c, s, 0.0];
        let f_disc = oracle.correlation(&xhat, &yhat);
        let f_ana = analytic_correlation_poly(&sh, k, 1, 2, m, xhat, yhat)
            .unwrap()
            .value
            .scalar()
            .unwrap();
        let stderr = oracle.predicted_stderr(&xhat, &yhat, 4096);
        worst = worst.max((f_disc - f_ana).norm() / stderr);
    }
    assert!(worst < 2.5, "bias/stderr budget exceeded: {worst:.2}");
}

/// The pairing <f, phi> is centered Gaussian: skewness and excess kurtosis
/// sit inside 5 sigma Monte Carlo bands at 1e4 seeds, and the mean inside 4
/// standard errors of zero.
#[test]
fn pairing_distribution_is_centered_gaussian() {
    let grid = SpatialGrid::standard(2, 64).unwrap();
    let sigma = gaussian_bump_strength(grid, [0.0; 3], 0.15, 1.0).unwrap();
    let spec = validate_source(
        WaveModel::polyharmonic(2, 1).unwrap(),
        SourceSpec { m: 1.5, s: 3, strength: sigma },
    )
    .unwrap();
    let sampler = ScalarSampler::new(&spec).unwrap();
    let phi: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid.node(i);
            (-(x[0] * x[0] + x[1] * x[1]) / 0.1).exp()
        })
        .collect();
    let n = 10_000usize;
    let samples: Vec<f64> = wavecorr::par::map_indexed(n, |seed| {
        sampler.sample(seed as u64).pair_with(&phi).unwrap()
    });
    let (mean, var, skew, ex_kurt) = sample_moments(&samples);
    let nf = n as f64;
    assert!(
        mean.abs() <= 4.0 * (var / nf).sqrt(),
        "mean {mean:.3e} vs band {:.3e}",
        4.0 * (var / nf).sqrt()
    );
    assert!(skew.abs() <= 5.0 * (6.0 / nf).sqrt(), "skew {skew:.4}");
    assert!(ex_kurt.abs() <= 5.0 * (24.0 / nf).sqrt(), "kurtosis {ex_kurt:.4}");
}

/// Vector sampler cross-covariance against the bin-level mode-sum oracle:
/// E[<f_i, phi> <f_j, psi>] = sum_c sum_p w_p^2 B_ic(p) C_jc(conj p) with
/// B_ic(p) = h^d sum_x S_ic(x) phi(x) e^{i xi_p.x}.
#[test]
fn vector_cross_covariance_matches_mode_sum_oracle() {
    let grid = SpatialGrid::standard(2, 32).unwrap();
    let m = 1.5;
    let coeff = SymMat::from_rows(2, &[[1.0, 0.4, 0.0], [0.4, 2.0, 0.0]]);
    let strength = matrix_bump_strength(grid, [0.0; 3], 0.15, coeff).unwrap();
    let spec = validate_source(
        WaveModel::elastic(2, 2.0, 1.0).unwrap(),
        SourceSpec { m, s: 3, strength: strength.clone() },
    )
    .unwrap();
    let sampler = VectorSampler::new(&spec).unwrap();

    let phi: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid.node(i);
            (-(x[0] * x[0] + x[1] * x[1]) / 0.12).exp()
        })
        .collect();
    let psi: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid.node(i);
            ((2.0 * x[1]).cos()) * (-(x[0] * x[0] + x[1] * x[1]) / 0.2).exp()
        })
        .collect();

    // Empirical cross-moments.
    let n = 4000usize;
    let draws: Vec<[f64; 4]> = wavecorr::par::map_indexed(n, |seed| {
        let f = sampler.sample(seed as u64);
        let comps = f.vector_values().unwrap();
        let w = grid.cell_volume();
        let pair = |c: &Vec<f64>, t: &Vec<f64>| -> f64 {
            w * c.iter().zip(t).map(|(a, b)| a * b).sum::<f64>()
        };
        [
            pair(&comps[0], &phi),
            pair(&comps[1], &phi),
            pair(&comps[0], &psi),
            pair(&comps[1], &psi),
        ]
    });

    // Mode-sum oracle: S^{1/2} per node via the same eigen decomposition the
    // sampler uses is avoided; for the constant-coefficient bump the square
    // root has the closed form sqrt(bump) * sqrt_psd(coeff).
    let root = coeff.sqrt_psd(0.0).unwrap();
    let sqrt_bump: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid.node(i);
            let r2 = x[0] * x[0] + x[1] * x[1];
            if r2 < 1.0 {
                ((-(r2) / (2.0 * 0.15 * 0.15)).exp()).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let fft = GridFft::new(grid);
    let l = grid.box_width();
    let weight_sq: Vec<f64> = (0..grid.len())
        .map(|idx| {
            let xi = grid.mode(idx);
            let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            if r == 0.0 {
                0.0
            } else {
                l.powi(-2) * r.powf(-m)
            }
        })
        .collect();
    let transform = |i: usize, c: usize, t: &Vec<f64>| -> Vec<Complex64> {
        let mut data: Vec<Complex64> = (0..grid.len())
            .map(|idx| Complex64::new(root.a[i][c] * sqrt_bump[idx] * t[idx], 0.0))
            .collect();
        fft.inverse(&mut data);
        let h = grid.cell_volume();
        (0..grid.len())
            .map(|idx| data[idx] * grid.center_sign(idx) * h)
            .collect()
    };
    let expect = |i: usize, j: usize, t1: &Vec<f64>, t2: &Vec<f64>| -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..2 {
            let b = transform(i, c, t1);
            let cjc = transform(j, c, t2);
            for idx in 0..grid.len() {
                if weight_sq[idx] == 0.0 {
                    continue;
                }
                acc += weight_sq[idx] * b[idx] * cjc[grid.conjugate_index(idx)];
            }
        }
        acc.re
    };

    // Compare E[<f_0,phi><f_1,psi>] and E[<f_1,phi><f_0,psi>].
    for (a, b, label) in [(0usize, 3usize, (0, 1)), (1, 2, (1, 0))] {
        let emp_mean =
            draws.iter().map(|d| d[a] * d[b]).sum::<f64>() / n as f64;
        let var = draws
            .iter()
            .map(|d| (d[a] * d[b] - emp_mean).powi(2))
            .sum::<f64>()
            / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        let oracle = expect(label.0, label.1, &phi, &psi);
        let dev = (emp_mean - oracle).abs() / se;
        assert!(
            dev < 5.0,
            "cross moment {label:?}: emp {emp_mean:.4e}, oracle {oracle:.4e}, {dev:.2} se"
        );
    }
}

/// Elastic Monte Carlo correlations against the analytic r = 0 formula:
/// statistical agreement at moderate wavenumber, where the factorized
/// sampler residual (measured ~1.3 stderr at n = 600 for the plateau
/// strength) stays well inside the 5 sigma check band.
#[test]
fn elastic_mc_correlation_tracks_analytic_formula() {
    use wavecorr::correlation::{
        analytic_correlation_elastic, mc_correlation_matrix, ElasticBranch,
    };
    use wavecorr::farfield::elastic_farfield;
    use wavecorr::params::StrengthField;

    let grid = SpatialGrid::standard(2, 32).unwrap();
    let (lambda, mu, k, m) = (2.0, 1.0, 16.0, 1.5);
    let coeff = SymMat::from_rows(2, &[[1.0, 0.3, 0.0], [0.3, 2.0, 0.0]]);
    let strength = StrengthField::from_matrix_fn(grid, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        if r2 < 1.0 {
            coeff.scale((1.0 - r2) * (1.0 - r2))
        } else {
            SymMat::zero(2)
        }
    })
    .unwrap();
    let spec = validate_source(
        WaveModel::elastic(2, lambda, mu).unwrap(),
        SourceSpec { m, s: 3, strength: strength.clone() },
    )
    .unwrap();
    let sampler = VectorSampler::new(&spec).unwrap();
    let shm = QuadratureSigmaHatMatrix::new(&strength).unwrap();

    let xhat = [1.0, 0.0, 0.0];
    let yhat = [-0.96, 0.28, 0.0];
    let n = 600usize;
    let ensemble: Vec<([Complex64; 3], [Complex64; 3], [Complex64; 3], [Complex64; 3])> =
        wavecorr::par::map_indexed(n, |seed| {
            let f = sampler.sample(seed as u64);
            let both = elastic_farfield(&f, k, lambda, mu, &[xhat, yhat]).unwrap();
            (
                both[0].0.vector_value().unwrap(),
                both[1].0.vector_value().unwrap(),
                both[0].1.vector_value().unwrap(),
                both[1].1.vector_value().unwrap(),
            )
        });
    for (branch, ax, ay) in [
        (ElasticBranch::P, 0usize, 1usize),
        (ElasticBranch::S, 2, 3),
    ] {
        let at_x: Vec<[Complex64; 3]> = ensemble
            .iter()
            .map(|row| [row.0, row.1, row.2, row.3][ax])
            .collect();
        let at_y: Vec<[Complex64; 3]> = ensemble
            .iter()
            .map(|row| [row.0, row.1, row.2, row.3][ay])
            .collect();
        let rec = mc_correlation_matrix(&at_x, &at_y, 2, xhat, yhat, k).unwrap();
        let ana = analytic_correlation_elastic(&shm, k, lambda, mu, m, xhat, yhat, branch)
            .unwrap()
            .value
            .matrix()
            .unwrap();
        let mc = rec.value.matrix().unwrap();
        let dev = mc.sub(&ana).max_entry_norm() / rec.stderr;
        assert!(dev < 5.0, "{branch:?}: deviation {dev:.2} stderr");
    }
}

/// Bit-identical results regardless of rayon pool size: the ensemble map is
/// slot-indexed and the correlation fold reduces in fixed chunks.
#[test]
fn thread_count_does_not_change_bits() {
    let grid = SpatialGrid::standard(2, 32).unwrap();
    let sigma = plateau_strength(grid, 1.0);
    let spec = validate_source(
        WaveModel::polyharmonic(2, 1).unwrap(),
        SourceSpec { m: 2.0, s: 3, strength: sigma },
    )
    .unwrap();
    let sampler = ScalarSampler::new(&spec).unwrap();
    let dirs = random_directions(2, 4, 5);
    let run = || -> (u64, u64) {
        let ensemble: Vec<Vec<Complex64>> = wavecorr::par::map_indexed(64, |seed| {
            let f = sampler.sample(seed as u64);
            poly_farfield(&f, 8.0, 1, &dirs)
                .unwrap()
                .iter()
                .map(|s| s.scalar_value().unwrap())
                .collect()
        });
        let a: Vec<Complex64> = ensemble.iter().map(|r| r[0]).collect();
        let b: Vec<Complex64> = ensemble.iter().map(|r| r[1]).collect();
        let rec = mc_correlation(&a, &b, dirs[0], dirs[1], 8.0).unwrap();
        let v = rec.value.scalar().unwrap();
        (v.re.to_bits(), v.im.to_bits())
    };
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(run);
    let multi = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(run);
    assert_eq!(single, multi);
}
