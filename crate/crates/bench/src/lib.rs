//! Shared fixtures for the criterion benchmarks in `benches/`.

use rkhs_flm_core::simulate::generate;
use rkhs_flm_core::{FunctionalDataset, Scenario, ScenarioSpec};

/// A simulated dataset on the default 101-point grid.
pub fn dataset(scenario: Scenario, n: usize, seed: u64) -> FunctionalDataset {
    generate(&ScenarioSpec::new(scenario, n, seed))
        .expect("scenario generation")
        .data
}
