use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use selftest_core::batch::{criteria_sweep, tilted_identity_sweep, Execution};
use selftest_core::Tolerance;

fn modes() -> [(&'static str, Execution); 2] {
    [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)]
}

fn central_support(c: &mut Criterion) {
    let mut group = c.benchmark_group("criteria_sweep");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, 60), &exec, |b, &exec| {
            b.iter(|| criteria_sweep(7, 60, Tolerance::default(), exec))
        });
    }
    group.finish();
}

fn tilted_identities(c: &mut Criterion) {
    let mut group = c.benchmark_group("tilted_identity_sweep");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, 50), &exec, |b, &exec| {
            b.iter(|| tilted_identity_sweep(0.75, 7, 50, Tolerance::default(), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, central_support, tilted_identities);
criterion_main!(benches);
