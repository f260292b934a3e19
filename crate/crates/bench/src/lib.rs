//! Shared fixtures for the benchmarks.

use trunca::{CopulaModel, Generator, TruncationPoint};

pub fn clayton2() -> CopulaModel {
    CopulaModel::archimedean(Generator::clayton(2.0).unwrap(), 2).unwrap()
}

pub fn joe(d: usize) -> CopulaModel {
    CopulaModel::archimedean(Generator::joe(2.0).unwrap(), d).unwrap()
}

pub fn mo() -> CopulaModel {
    CopulaModel::marshall_olkin(0.2, 0.7).unwrap()
}

pub fn point(m: &CopulaModel, t: &[f64]) -> TruncationPoint {
    TruncationPoint::new(m, t).unwrap()
}

/// Deterministic points spread over the unit square.
pub fn grid2(k: usize) -> Vec<[f64; 2]> {
    (1..=k)
        .flat_map(|i| (1..=k).map(move |j| [i as f64 / (k + 1) as f64, j as f64 / (k + 1) as f64]))
        .collect()
}
