//! Data-parallel map against the same work pinned to one thread. With
//! default features the jobs-default group uses the rayon pool; compiled
//! with --no-default-features both groups take the sequential fallback,
//! which makes the two builds directly comparable.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use qcorr::exec::run_with_jobs;
use qcorr::frontier::scatter_random;
use qcorr::measures::correlation_report;
use qcorr::states::random_state;
use std::hint::black_box;

fn bench_single_report(c: &mut Criterion) {
    let rho = random_state(7);
    let mut group = c.benchmark_group("correlation_report");
    group.sample_size(20);
    group.bench_function("random_state", |b| {
        b.iter(|| correlation_report(black_box(&rho)).unwrap())
    });
    group.finish();
}

fn bench_scatter(c: &mut Criterion) {
    let mut group = c.benchmark_group("scatter_reports");
    group.sample_size(10);
    let n = 16usize;
    group.throughput(Throughput::Elements(n as u64));
    group.bench_with_input(BenchmarkId::new("jobs", "1"), &n, |b, &n| {
        b.iter(|| run_with_jobs(Some(1), || scatter_random(black_box(n), 3)))
    });
    group.bench_with_input(BenchmarkId::new("jobs", "default"), &n, |b, &n| {
        b.iter(|| run_with_jobs(None, || scatter_random(black_box(n), 3)))
    });
    group.finish();
}

criterion_group!(benches, bench_single_report, bench_scatter);
criterion_main!(benches);
