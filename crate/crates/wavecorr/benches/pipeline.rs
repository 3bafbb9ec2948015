//! Benchmarks of the data-parallel pipeline stages, timed on a single-thread
//! rayon pool and on the default pool side by side. Building with
//! `--no-default-features` swaps in the sequential implementations, in which
//! case the two pools coincide.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use wavecorr::correlation::mc_correlation;
use wavecorr::farfield::{direction_grid, poly_farfield};
use wavecorr::grid::SpatialGrid;
use wavecorr::params::{validate_source, SourceSpec, StrengthField};
use wavecorr::reconstruction::{inverse_fourier_cutoff, FourierCoefficientGrid};
use wavecorr::sampler::ScalarSampler;
use wavecorr::WaveModel;

fn plateau(grid: SpatialGrid) -> StrengthField {
    StrengthField::from_fn(grid, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        if r2 < 1.0 {
            (1.0 - r2) * (1.0 - r2)
        } else {
            0.0
        }
    })
    .unwrap()
}

/// Runs a closure inside a rayon pool; 0 threads means the default pool.
fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

const POOLS: [(&str, usize); 2] = [("seq-pool", 1), ("par-pool", 0)];

fn bench_sampler(c: &mut Criterion) {
    let grid = SpatialGrid::standard(2, 128).unwrap();
    let spec = validate_source(
        WaveModel::polyharmonic(2, 1).unwrap(),
        SourceSpec { m: 2.0, s: 3, strength: plateau(grid) },
    )
    .unwrap();
    let sampler = ScalarSampler::new(&spec).unwrap();
    let mut group = c.benchmark_group("sample_ensemble_2d_128");
    for (name, threads) in POOLS {
        group.bench_with_input(BenchmarkId::from_parameter(name), &threads, |b, &t| {
            b.iter(|| {
                with_pool(t, || {
                    wavecorr::par::map_indexed(16, |seed| sampler.sample(seed as u64))
                })
            })
        });
    }
    group.finish();
}

fn bench_farfield(c: &mut Criterion) {
    let grid = SpatialGrid::standard(2, 128).unwrap();
    let spec = validate_source(
        WaveModel::polyharmonic(2, 1).unwrap(),
        SourceSpec { m: 2.0, s: 3, strength: plateau(grid) },
    )
    .unwrap();
    let sampler = ScalarSampler::new(&spec).unwrap();
    let fields: Vec<_> = (0..8).map(|s| sampler.sample(s)).collect();
    let dirs = direction_grid(2, 64);
    let mut group = c.benchmark_group("farfield_64dirs_8fields");
    for (name, threads) in POOLS {
        group.bench_with_input(BenchmarkId::from_parameter(name), &threads, |b, &t| {
            b.iter(|| {
                with_pool(t, || {
                    wavecorr::par::map_indexed(fields.len(), |i| {
                        poly_farfield(&fields[i], 16.0, 1, &dirs).unwrap()
                    })
                })
            })
        });
    }
    group.finish();
}

fn bench_mc_fold(c: &mut Criterion) {
    let rng = wavecorr::rng::CounterRng::new(1, 1);
    let xs: Vec<Complex64> = (0..4096)
        .map(|i| {
            Complex64::new(
                rng.uniform(2 * i as u64) - 0.5,
                rng.uniform(2 * i as u64 + 1) - 0.5,
            )
        })
        .collect();
    let ys: Vec<Complex64> = xs.iter().map(|z| z * Complex64::new(0.3, 0.7)).collect();
    c.bench_function("mc_correlation_fold_4096", |b| {
        b.iter(|| mc_correlation(&xs, &ys, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 8.0).unwrap())
    });
}

fn bench_synthesis(c: &mut Criterion) {
    let out = SpatialGrid::standard(2, 64).unwrap();
    let mut coeffs = FourierCoefficientGrid::new(2, 0.8, 24.0).unwrap();
    for i in 0..coeffs.len() {
        let g = coeffs.gamma(i);
        let r2 = g[0] * g[0] + g[1] * g[1];
        coeffs.set(i, Complex64::new((-0.01 * r2).exp(), 0.0));
    }
    let mut group = c.benchmark_group("synthesis_64grid");
    for (name, threads) in POOLS {
        group.bench_with_input(BenchmarkId::from_parameter(name), &threads, |b, &t| {
            b.iter(|| with_pool(t, || inverse_fourier_cutoff(&coeffs, &out, 16.0).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_sampler,
    bench_farfield,
    bench_mc_fold,
    bench_synthesis
);
criterion_main!(benches);
