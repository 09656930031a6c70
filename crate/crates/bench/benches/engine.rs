use std::hint::black_box;

use biharm_core::morphism::point_report;
use biharm_core::{bitension, instantiate, sample_points, Jet, Params};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn jets(c: &mut Criterion) {
    let mut group = c.benchmark_group("jet");
    for dim in [3usize, 5, 8] {
        let x0: Vec<f64> = (0..dim).map(|i| 0.1 + 0.05 * i as f64).collect();
        let vars = Jet::variables(&x0, 4).unwrap();
        let r2 = vars.iter().fold(vars[0].zero_like(), |acc, v| &acc + &(v * v));
        let f = r2.add_scalar(1.0).recip().unwrap();
        group.bench_with_input(BenchmarkId::new("mul", dim), &dim, |b, _| {
            b.iter(|| black_box(&f) * black_box(&r2))
        });
        let inner: Vec<Jet> = vars.iter().map(|v| v * &f).collect();
        group.bench_with_input(BenchmarkId::new("compose", dim), &dim, |b, _| {
            b.iter(|| black_box(&f).compose(black_box(&inner)).unwrap())
        });
    }
    group.finish();
}

fn pipeline(c: &mut Criterion) {
    let mut group = c.benchmark_group("pipeline");
    for (id, n) in [("inversion", 4usize), ("ball_identity", 4), ("stereo_identity", 5)] {
        let params = Params { n, ..Params::default() };
        let entry = instantiate(id, &params).unwrap();
        let x = sample_points(&entry, 1, 1).remove(0);
        group.bench_function(BenchmarkId::new("bitension", format!("{id}/{n}")), |b| {
            b.iter(|| bitension(&entry.map, &entry.source_metric, &entry.target_metric, black_box(&x)).unwrap())
        });
        group.bench_function(BenchmarkId::new("point_report", format!("{id}/{n}")), |b| {
            b.iter(|| point_report(&entry.map, &entry.source_metric, &entry.target_metric, black_box(&x), 1e-8).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, jets, pipeline);
criterion_main!(benches);
