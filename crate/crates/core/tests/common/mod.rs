#![allow(dead_code)]

use multidirsbm::synthetic::ScenarioDef;
use multidirsbm::{ModelParams, Partition, Sample, Scenario};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random scenario: P entries in [lo, hi], A entries in [0.3, 3].
pub fn random_scenario(seed: u64, n: usize, layers: usize, k: usize, lo: f64, hi: f64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mat = |a: f64, b: f64| -> Vec<Vec<f64>> {
        (0..k).map(|_| (0..k).map(|_| rng.random_range(a..b)).collect()).collect()
    };
    let p = (0..layers).map(|_| mat(lo, hi)).collect();
    let a = (0..layers).map(|_| mat(0.3, 3.0)).collect();
    Scenario::try_from(ScenarioDef { name: "random".into(), description: String::new(), n, theta: None, p, a })
        .unwrap()
}

pub fn random_instance(seed: u64, n: usize, layers: usize, k: usize) -> (Scenario, Sample) {
    let sc = random_scenario(seed, n, layers, k, 0.2, 0.9);
    let sample = sc.generate(seed ^ 0xABCD);
    (sc, sample)
}

/// Random row-stochastic responsibilities.
pub fn random_zhat(seed: u64, n: usize, k: usize) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = Array2::from_shape_fn((n, k), |_| rng.random_range(0.05..1.0));
    for mut row in z.rows_mut() {
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    z
}

/// Random labels using every cluster.
pub fn random_labels(seed: u64, n: usize, k: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        if (0..k).all(|c| labels.contains(&c)) {
            return labels;
        }
    }
}

pub fn soft_partition(labels: Vec<usize>, k: usize, zhat: Array2<f64>) -> Partition {
    Partition::new(labels, k).unwrap().with_responsibilities(zhat).unwrap()
}

/// Maximize a unimodal function on [a, b] by golden-section search.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

pub fn params_with(theta: Vec<f64>, p: Vec<Array2<f64>>, a: Vec<Array2<f64>>) -> ModelParams {
    ModelParams::new(theta, p, a).unwrap()
}
