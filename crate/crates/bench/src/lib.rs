//! Shared inputs for the planning benchmarks.

use bodt_core::workload::{random_scenario, RandomLimits};
use bodt_core::{generate_scenario, GeneratorSpec, Scenario};

/// The default generator output: 47 locations, 8 sites, 3290 tasks.
pub fn default_shape() -> Scenario {
    generate_scenario(&GeneratorSpec::default()).expect("default generator spec is valid")
}

/// A random instance small enough for the exact solver.
pub fn oracle_sized(seed: u64) -> Scenario {
    random_scenario(
        seed,
        RandomLimits {
            max_tasks: 8,
            max_sites: 3,
            max_locations: 3,
        },
    )
}
