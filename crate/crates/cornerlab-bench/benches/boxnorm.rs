use cornerlab_core::{box_norm, FunctionGk};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_box_norm(c: &mut Criterion) {
    let mut group = c.benchmark_group("box_norm");
    group.sample_size(10);
    for &(n, k) in &[(128usize, 2usize), (256, 2), (24, 3)] {
        let f = FunctionGk::random_signs(n, k, 7).unwrap();
        group.bench_with_input(BenchmarkId::new("recursive", format!("n{n}_k{k}")), &(), |b, _| {
            b.iter(|| box_norm(&f).unwrap().raw_power)
        });
    }
    group.finish();
}

criterion_group!(benches, bench_box_norm);
criterion_main!(benches);
