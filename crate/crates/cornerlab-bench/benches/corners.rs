use cornerlab_core::{corner_stats, generate_subset, parse_descriptor, SubsetSpec};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_corner_stats(c: &mut Criterion) {
    let mut group = c.benchmark_group("corner_stats");
    group.sample_size(10);
    for desc in ["cyclic:60", "sl2:5"] {
        let g = parse_descriptor(desc).unwrap();
        let a = generate_subset(&g, 2, &SubsetSpec::Random { delta: 0.25 }, 1).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(desc), &(), |b, _| {
            b.iter(|| corner_stats(&g, &a).unwrap().total)
        });
    }
    group.finish();
}

criterion_group!(benches, bench_corner_stats);
criterion_main!(benches);
