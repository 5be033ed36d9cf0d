//! Shared fixtures for the benchmarks and the density calibration binary.

use ddsm_core::analysis::{covering_radius_within, revealing_points};
use ddsm_core::{registry_lookup, run, AlgoConfig};

/// Grid points per axis used when measuring covering radii.
pub const DENSITY_GRID: usize = 801;

/// Counterexample run with a radius-2 Revealing Poll drawing four points per
/// iteration and no step-size floor.
pub fn density_config(seed: u64, iterations: u64) -> AlgoConfig {
    AlgoConfig {
        revealing_count: 4,
        alpha_min: 0.0,
        ..AlgoConfig::revealing(seed, iterations)
    }
}

/// Covering radius of the Revealing Poll points from unsuccessful
/// iterations, measured over `]-2, 2[ ∩ B_2(x*)` with `x*` the final
/// incumbent.
pub fn density_covering_radius(seed: u64, iterations: u64) -> f64 {
    let objective = registry_lookup("counterexample").expect("bundled objective");
    let trace = run(&density_config(seed, iterations), &objective).expect("valid config");
    let points = revealing_points(&trace, true);
    let center = trace.final_point().to_vec();
    covering_radius_within(&points, &center, 2.0, DENSITY_GRID, |g| {
        g[0] > -2.0 && g[0] < 2.0
    })
}
