use cornerlab_core::{character_degrees, parse_descriptor};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_degrees(c: &mut Criterion) {
    let mut group = c.benchmark_group("character_degrees");
    group.sample_size(10);
    for desc in ["sym:4", "sl2:5", "sl2:7"] {
        let g = parse_descriptor(desc).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(desc), &(), |b, _| {
            b.iter(|| character_degrees(&g).unwrap().len())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_degrees);
criterion_main!(benches);
