//! Shared fixtures for the criterion benchmarks.

use empbridge_core::simulate::{generate_dataset, CovariateDist, ModelSpec};
use empbridge_core::Dataset;

/// Intercept-plus-slope dataset ordered by a uniform covariate.
pub fn uniform_dataset(n: usize, seed: u64) -> Dataset {
    let spec = ModelSpec::order_by_covariate(CovariateDist::STANDARD_UNIFORM, true);
    generate_dataset(&spec, n, seed).expect("valid spec")
}
