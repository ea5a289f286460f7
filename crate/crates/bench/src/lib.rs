//! Shared instance builders for the benchmark targets.

use fieldpath_core::estimator::PredictionSet;
use fieldpath_core::graphs::grid_graph;
use fieldpath_core::model::{IppInstance, SparseSsInstance};
use fieldpath_core::randfield::{Kernel, Point, RandomFieldModel};
use fieldpath_core::rng::SplitMix64;

pub fn se_field() -> RandomFieldModel {
    RandomFieldModel::new(
        Kernel::SquaredExponential { std_dev: 1.0, length_scale: 1.0 },
        0.25,
    )
    .unwrap()
}

pub fn random_omega(seed: u64, n: usize, span: f64) -> PredictionSet {
    let mut g = SplitMix64::new(seed);
    let pts = (0..n)
        .map(|_| Point::xy(g.next_range(0.0, span), g.next_range(0.0, span)))
        .collect();
    let w = (0..n).map(|_| g.next_f64()).collect();
    PredictionSet::new(pts, w).unwrap()
}

pub fn grid_ipp(n: usize, budget: f64, seed: u64, predictions: usize) -> IppInstance {
    let graph = grid_graph(n, 1.0).unwrap();
    let omega = random_omega(seed, predictions, (n - 1) as f64);
    IppInstance::new(se_field(), graph, omega, budget).unwrap()
}

pub fn scattered_ss(m: usize, k: usize, seed: u64, predictions: usize) -> SparseSsInstance {
    let mut g = SplitMix64::new(seed);
    let theta = (0..m)
        .map(|_| Point::xy(g.next_range(0.0, 3.0), g.next_range(0.0, 3.0)))
        .collect();
    let omega = random_omega(seed.wrapping_add(1), predictions, 3.0);
    SparseSsInstance::new(se_field(), theta, omega, k).unwrap()
}
