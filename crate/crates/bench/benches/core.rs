use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use pdov_core::*;

fn tables(c: &mut Criterion) {
    let mut g = c.benchmark_group("coeff_table");
    for kmax in [100usize, 200, 400] {
        g.bench_with_input(BenchmarkId::new("theta=0.3", kmax), &kmax, |b, &k| {
            b.iter(|| build_coeff_table(black_box(0.3), k).unwrap())
        });
    }
    g.finish();
}

fn series(c: &mut Criterion) {
    let mut g = c.benchmark_group("k_ratio");
    for theta in [1e-3, 1e-7] {
        let spec = SelectionSpec::new(6.0, theta).unwrap();
        g.bench_with_input(BenchmarkId::new("lambda=6", theta), &spec, |b, s| {
            b.iter(|| k_ratio(s, 1, false).unwrap())
        });
    }
    g.finish();
    let spec = SelectionSpec::new(6.0, 0.3).unwrap();
    c.bench_function("mgf lambda=6 theta=0.3 t=1", |b| b.iter(|| mgf(&spec, black_box(1.0), spec.kmax()).unwrap()));
}

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("gem");
    for theta in [0.1, 1.0] {
        g.bench_with_input(BenchmarkId::new("single draw", theta), &theta, |b, &t| {
            let mut i = 0u64;
            b.iter(|| {
                i += 1;
                sample_gem_stream(t, 1e-8, 0, i).unwrap()
            })
        });
    }
    g.finish();
    let spec = SelectionSpec::new(6.0, 0.3).unwrap();
    c.bench_function("tilted_estimate n=1e4", |b| b.iter(|| tilted_estimate(&spec, phi2, 10_000, 1).unwrap()));
}

criterion_group!(benches, tables, series, sampling);
criterion_main!(benches);
