//! Sequential versus pooled execution for the two hot paths: a full score
//! trajectory and one leave-one-out curve.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dynbt::experiments::{simulate_instance, Setting, TableConfig};
use dynbt::kernel::KernelSpec;
use dynbt::parallel::with_jobs;
use dynbt::solver::{fit_trajectory, FitOptions, TrajectoryMode};
use dynbt::tuning::{select_bandwidth, CvOptions, FoldSelection};
use dynbt::Dataset;

fn instance(n_teams: usize, n_times: usize) -> Dataset {
    let cfg = TableConfig { n_teams, n_times, ..TableConfig::new(Setting::BradleyTerry, 1, 3) };
    simulate_instance(&cfg, 0).unwrap().dataset
}

fn trajectory(c: &mut Criterion) {
    let ds = instance(50, 50);
    let spec = KernelSpec::gaussian(0.05).unwrap();
    let opts = FitOptions::default();
    let grid: Vec<f64> = (0..200).map(|k| k as f64 / 199.0).collect();
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());

    let mut group = c.benchmark_group("trajectory_200_points");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| fit_trajectory(&ds, &spec, &grid, &opts, TrajectoryMode::Sequential).unwrap())
    });
    group.bench_function(BenchmarkId::new("parallel", jobs), |b| {
        b.iter(|| with_jobs(jobs, || fit_trajectory(&ds, &spec, &grid, &opts, TrajectoryMode::Parallel).unwrap()))
    });
    group.finish();
}

fn loocv(c: &mut Criterion) {
    let ds = instance(30, 30);
    let grid = [0.02, 0.05, 0.1, 0.2];
    let cv = CvOptions { folds: FoldSelection::Subsample { folds: 500, seed: 1 }, ..CvOptions::default() };
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());

    let mut group = c.benchmark_group("loocv_4_bandwidths");
    group.sample_size(10);
    group.bench_function("one_thread", |b| b.iter(|| with_jobs(1, || select_bandwidth(&ds, &grid, &cv).unwrap())));
    group.bench_function(BenchmarkId::new("pool", jobs), |b| {
        b.iter(|| with_jobs(jobs, || select_bandwidth(&ds, &grid, &cv).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, trajectory, loocv);
criterion_main!(benches);
