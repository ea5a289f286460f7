use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use fieldpath_bench::{random_omega, se_field};
use fieldpath_core::estimator::{restricted_optimal_g, total_weighted_error, QuadraticForm};
use fieldpath_core::randfield::Point;
use fieldpath_core::rng::SplitMix64;

fn bench_total_weighted_error(c: &mut Criterion) {
    let field = se_field();
    let omega = random_omega(7, 25, 4.0);
    let mut g = SplitMix64::new(11);
    let s: Vec<Point> = (0..25)
        .map(|_| Point::xy(g.next_range(0.0, 4.0), g.next_range(0.0, 4.0)))
        .collect();
    c.bench_function("total-weighted-error-25x25", |b| {
        b.iter(|| black_box(total_weighted_error(&field, &omega, &s).unwrap()));
    });
}

fn bench_restricted_optimum(c: &mut Criterion) {
    let field = se_field();
    let mut g = SplitMix64::new(13);
    let theta: Vec<Point> = (0..36)
        .map(|_| Point::xy(g.next_range(0.0, 5.0), g.next_range(0.0, 5.0)))
        .collect();
    let x = Point::xy(2.5, 2.5);
    let form = QuadraticForm::for_prediction(&field, &x, &theta).unwrap();
    let support: Vec<usize> = (0..36).step_by(3).collect();
    c.bench_function("restricted-optimum-36-to-12", |b| {
        b.iter(|| black_box(restricted_optimal_g(&form, &support).unwrap()));
    });
}

criterion_group!(benches, bench_total_weighted_error, bench_restricted_optimum);
criterion_main!(benches);
