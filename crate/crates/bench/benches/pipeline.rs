use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use empbridge_bench::uniform_dataset;
use empbridge_core::simulate::{monte_carlo_level, CovariateDist, ModelSpec};
use empbridge_core::{quadratic_form_inv, run_test, Matrix, OrderBy};

fn bench_run_test(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_test");
    for n in [100, 1_000, 10_000] {
        let ds = uniform_dataset(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &ds, |b, ds| {
            b.iter(|| run_test(black_box(ds.clone()), 3, true, OrderBy::Key).unwrap())
        });
    }
    group.finish();
}

fn bench_quadratic_form(c: &mut Criterion) {
    let mut group = c.benchmark_group("quadratic_form_inv");
    for k in [3, 10, 50] {
        let mut a = Matrix::identity(k);
        for i in 0..k {
            for j in 0..k {
                a[(i, j)] += 1.0 / (1.0 + (i + j) as f64);
            }
        }
        let v: Vec<f64> = (0..k).map(|i| i as f64).collect();
        group.bench_with_input(BenchmarkId::from_parameter(k), &(a, v), |b, (a, v)| {
            b.iter(|| quadratic_form_inv(black_box(a), black_box(v)).unwrap())
        });
    }
    group.finish();
}

fn bench_level(c: &mut Criterion) {
    let spec = ModelSpec::order_by_covariate(CovariateDist::STANDARD_UNIFORM, true);
    c.bench_function("monte_carlo_level n=500 reps=200", |b| {
        b.iter(|| monte_carlo_level(&spec, 500, 200, 3, 0.05, black_box(7)).unwrap())
    });
}

criterion_group!(benches, bench_run_test, bench_quadratic_form, bench_level);
criterion_main!(benches);
