use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dendra::{cluster, GroupMode, Method, MethodSpec, Weighting};
use dendra_bench::random_distance_matrix;

fn bench_methods(c: &mut Criterion) {
    let mut group = c.benchmark_group("cluster");
    group.sample_size(10);
    for &n in &[64usize, 128, 256] {
        let m = random_distance_matrix(n, 42);
        for method in [Method::Single, Method::Complete, Method::Arithmetic, Method::Ward] {
            let spec = MethodSpec::new(method, Weighting::Unweighted).unwrap();
            group.bench_with_input(
                BenchmarkId::new(method.name(), n),
                &(&m, spec),
                |b, (m, spec)| {
                    b.iter(|| cluster(m, spec, GroupMode::Variable, None).unwrap())
                },
            );
        }
    }
    group.finish();
}

criterion_group!(benches, bench_methods);
criterion_main!(benches);
