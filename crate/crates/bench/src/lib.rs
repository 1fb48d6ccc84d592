//! Shared fixtures for the benchmarks.

use multidirsbm::{scenario, FitConfig, Partition, Sample};

/// A sample from a preset plus the partition a short fit settles on.
pub fn fixture(name: &str, seed: u64) -> (Sample, Partition) {
    let sc = scenario(name).expect("preset exists");
    let sample = sc.generate(seed);
    let config = FitConfig { k: sc.k(), restarts: 1, seed, ..FitConfig::default() };
    let fitted = multidirsbm::fit(&sample.network, &config).expect("fixture fit");
    (sample, fitted.partition)
}
