//! Pilot simulation for the Revealing Poll density threshold.
//!
//! Runs the counterexample with `R = 2`, `m = 4` for a number of pilot seeds
//! and prints quantiles of the covering radius of the Revealing Poll points
//! (unsuccessful iterations only) over `]-2, 2[ ∩ B_2(x*)`.
//!
//! Usage: `calibrate_density [iterations] [seeds] [seed_offset]`

use ddsm_bench::density_covering_radius;

fn main() {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<u64>().expect("integer argument"));
    let iterations = args.next().unwrap_or(128);
    let seeds = args.next().unwrap_or(100);
    let offset = args.next().unwrap_or(1_000_000);

    let mut radii: Vec<f64> = (0..seeds)
        .map(|s| density_covering_radius(offset + s, iterations))
        .collect();
    radii.sort_by(f64::total_cmp);
    let q = |p: f64| radii[((radii.len() - 1) as f64 * p).round() as usize];
    println!("iterations={iterations} seeds={seeds}");
    println!(
        "min={} median={} p90={} p99={} max={}",
        q(0.0),
        q(0.5),
        q(0.9),
        q(0.99),
        q(1.0)
    );
}
