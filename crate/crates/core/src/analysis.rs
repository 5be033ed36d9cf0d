//! Post-hoc analysis of traces.
//!
//! Everything here reads an immutable [`Trace`] (or re-runs the engine, for
//! the Monte Carlo harness) and reports numbers: the refining subsequence and
//! its discontinuity gap, covering radii of sampled points, a sampled lower
//! estimate of the Clarke directional derivative, and escape statistics for
//! the Revealing Poll on the counterexample.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{distance, run, AlgoConfig, StepKind, Trace};
use crate::error::{AnalysisError, ConfigError};
use crate::objective::{pow2, ExtReal, ObjectiveSpec};
use crate::steps::{mix_seed, splitmix64};

/// Default angular tolerance (radians) when clustering refining directions.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-3;

/// Radius around `-1` within which a Monte Carlo trial counts as converged.
pub const CONVERGENCE_TOL: f64 = 1e-3;

/// Lower end of the escape interval `I = [-sqrt(2) - 1, 0]`, where the
/// counterexample is `<= 0`.
pub const ESCAPE_LOWER: f64 = -std::f64::consts::SQRT_2 - 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    /// Indices of all unsuccessful iterations.
    pub unsuccessful_indices: Vec<u64>,
    /// Incumbent of the last unsuccessful iteration.
    pub last_incumbent: Vec<f64>,
    /// Estimate of the limit of the unsuccessful incumbents. Equal to
    /// `last_incumbent` unless the tail contracts geometrically, in which
    /// case it is the Aitken extrapolation of the last three distinct
    /// incumbents.
    pub refined_point: Vec<f64>,
    pub alpha_tail: f64,
    /// Unit cluster representatives of the Poll and Revealing Poll
    /// directions at unsuccessful iterations, in order of first appearance.
    pub refining_directions: Vec<Vec<f64>>,
    /// `f(x_k)` over the unsuccessful iterations.
    pub f_tail: Vec<f64>,
    /// `f` at the last unsuccessful incumbent.
    pub f_limit: f64,
    /// Fresh evaluation of `f` at `refined_point`.
    pub f_refined: ExtReal,
    /// `f_limit - f_refined`; `-inf` if `f_refined` is `+inf`.
    pub gap: f64,
}

fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        Some(v.iter().map(|c| c / norm).collect())
    } else {
        None
    }
}

fn angle(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot.clamp(-1.0, 1.0).acos()
}

/// Greedy clustering in order of first appearance: a unit vector starts a
/// new cluster unless it lies within `tol` radians of an existing
/// representative.
pub fn cluster_directions(directions: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut reps: Vec<Vec<f64>> = Vec::new();
    for d in directions {
        if !reps.iter().any(|r| angle(r, d) <= tol) {
            reps.push(d.clone());
        }
    }
    reps
}

/// Componentwise Aitken extrapolation of `a, b, c`, applied only where the
/// differences keep their sign and shrink.
fn aitken(a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .zip(c)
        .map(|((&a, &b), &c)| {
            let d1 = b - a;
            let d2 = c - b;
            let ratio = d2 / d1;
            if d1 != 0.0 && ratio > 0.0 && ratio < 1.0 {
                c - d2 * d2 / (d2 - d1)
            } else {
                c
            }
        })
        .collect()
}

/// Extracts the refining subsequence (all unsuccessful iterations) and
/// measures the gap between `lim f(x_k)` and `f` at the refined point.
pub fn extract_refining(
    trace: &Trace,
    objective: &ObjectiveSpec,
    cluster_tol: f64,
) -> Result<RefinementReport, AnalysisError> {
    let unsuccessful: Vec<_> = trace.records.iter().filter(|r| !r.success).collect();
    let last = *unsuccessful
        .last()
        .ok_or(AnalysisError::NoUnsuccessfulIteration)?;

    let mut distinct: Vec<&[f64]> = Vec::new();
    for r in &unsuccessful {
        if distinct.last() != Some(&r.x_k.as_slice()) {
            distinct.push(&r.x_k);
        }
    }
    let refined_point = match distinct.as_slice() {
        [.., a, b, c] => aitken(a, b, c),
        _ => last.x_k.clone(),
    };

    let mut directions = Vec::new();
    for r in &unsuccessful {
        for o in &r.outcomes {
            if !matches!(o.step_kind, StepKind::Poll | StepKind::RevealingPoll) {
                continue;
            }
            for t in &o.trial_points {
                let diff: Vec<f64> = t.point.iter().zip(&r.x_k).map(|(p, x)| p - x).collect();
                if let Some(u) = normalized(&diff) {
                    directions.push(u);
                }
            }
        }
    }

    let f_refined = objective.value(&refined_point);
    let f_limit = last.f_xk;
    let gap = match f_refined {
        ExtReal::Finite(v) => f_limit - v,
        ExtReal::PosInf => f64::NEG_INFINITY,
    };
    Ok(RefinementReport {
        unsuccessful_indices: unsuccessful.iter().map(|r| r.k).collect(),
        last_incumbent: last.x_k.clone(),
        refined_point,
        alpha_tail: last.alpha_next,
        refining_directions: cluster_directions(&directions, cluster_tol),
        f_tail: unsuccessful.iter().map(|r| r.f_xk).collect(),
        f_limit,
        f_refined,
        gap,
    })
}

/// Describes the first place where `trace` departs from the closed-form
/// counterexample trajectory for `q = 0..=q_max`, or `None` if it matches.
pub fn closed_form_mismatch(trace: &Trace, q_max: u64) -> Result<Option<String>, AnalysisError> {
    let need = (2 * q_max + 2) as usize;
    if trace.records.len() < need {
        return Err(AnalysisError::TraceTooShort {
            have: trace.records.len(),
            need,
        });
    }
    for q in 0..=q_max {
        let scale = pow2(-(q as i32));
        let x = 1.25 * scale;
        let alpha = 0.25 * scale;
        let even = &trace.records[2 * q as usize];
        let odd = &trace.records[2 * q as usize + 1];
        if even.x_k != [x] || odd.x_k != [x] {
            return Ok(Some(format!("q={q}: incumbent is not 5/4 * 2^-{q}")));
        }
        if even.alpha_k.to_bits() != alpha.to_bits()
            || (2.0 * odd.alpha_k).to_bits() != alpha.to_bits()
        {
            return Ok(Some(format!("q={q}: step size is not 1/4 * 2^-{q}")));
        }
        if even.success {
            return Ok(Some(format!("iteration {} succeeded", 2 * q)));
        }
        let poll_ok = even.outcomes.len() == 1
            && even.outcome(StepKind::Poll).is_some_and(|o| {
                let pts: Vec<&[f64]> = o.trial_points.iter().map(|t| t.point.as_slice()).collect();
                o.trial_points
                    .iter()
                    .all(|t| t.in_domain && t.value.is_finite())
                    && pts == [[x - alpha].as_slice(), [x + alpha].as_slice()]
            });
        if !poll_ok {
            return Ok(Some(format!(
                "iteration {}: poll did not evaluate x -/+ alpha only",
                2 * q
            )));
        }
        let search_ok = odd.success
            && odd.outcomes.len() == 1
            && odd.outcome(StepKind::Search).is_some_and(|o| o.success);
        if !search_ok {
            return Ok(Some(format!(
                "iteration {} did not succeed via Search",
                2 * q + 1
            )));
        }
    }
    Ok(None)
}

/// True iff the trace follows `x_{2q} = x_{2q+1} = 5/4 * 2^-q` and
/// `alpha_{2q} = 1/4 * 2^-q = 2 alpha_{2q+1}` bit-exactly for `q <= q_max`,
/// with failing polls at even and successful searches at odd iterations.
pub fn verify_counterexample_closed_form(trace: &Trace, q_max: u64) -> Result<bool, AnalysisError> {
    Ok(closed_form_mismatch(trace, q_max)?.is_none())
}

/// Points of a regular grid over the cube around `center` (`resolution`
/// per axis) that fall inside the closed ball of radius `radius`.
fn ball_grid(center: &[f64], radius: f64, resolution: usize) -> Vec<Vec<f64>> {
    let n = center.len();
    let last = (resolution - 1) as f64;
    let axis: Vec<f64> = (0..resolution)
        .map(|j| match j {
            0 => -1.0,
            j if j == resolution - 1 => 1.0,
            j => (2 * j) as f64 / last - 1.0,
        })
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let offset: Vec<f64> = idx.iter().map(|&j| axis[j]).collect();
        if offset.iter().map(|c| c * c).sum::<f64>() <= 1.0 + 1e-12 {
            out.push(
                center
                    .iter()
                    .zip(&offset)
                    .map(|(c, o)| c + radius * o)
                    .collect(),
            );
        }
        let mut dim = 0;
        loop {
            if dim == n {
                return out;
            }
            idx[dim] += 1;
            if idx[dim] < resolution {
                break;
            }
            idx[dim] = 0;
            dim += 1;
        }
    }
}

/// Largest distance from a grid point of `B_radius(center)` to its nearest
/// element of `points`. `+inf` when `points` is empty.
pub fn covering_radius(
    points: &[Vec<f64>],
    center: &[f64],
    radius: f64,
    grid_resolution: usize,
) -> f64 {
    covering_radius_within(points, center, radius, grid_resolution, |_| true)
}

/// [`covering_radius`] restricted to grid points accepted by `region`.
/// Returns 0 if no grid point is accepted.
pub fn covering_radius_within<F>(
    points: &[Vec<f64>],
    center: &[f64],
    radius: f64,
    grid_resolution: usize,
    region: F,
) -> f64
where
    F: Fn(&[f64]) -> bool,
{
    assert!(grid_resolution >= 2, "grid_resolution must be >= 2");
    if points.is_empty() {
        return f64::INFINITY;
    }
    ball_grid(center, radius, grid_resolution)
        .into_iter()
        .filter(|g| region(g))
        .map(|g| {
            points
                .iter()
                .map(|p| distance(p, &g))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Every trial point evaluated in the trace, in evaluation order.
pub fn all_trial_points(trace: &Trace) -> Vec<Vec<f64>> {
    trace
        .records
        .iter()
        .flat_map(|r| r.trial_points())
        .map(|t| t.point.clone())
        .collect()
}

/// Revealing Poll trial points, optionally only from unsuccessful iterations.
pub fn revealing_points(trace: &Trace, unsuccessful_only: bool) -> Vec<Vec<f64>> {
    trace
        .records
        .iter()
        .filter(|r| !unsuccessful_only || !r.success)
        .filter_map(|r| r.outcome(StepKind::RevealingPoll))
        .flat_map(|o| o.trial_points.iter().map(|t| t.point.clone()))
        .collect()
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut c = 2u64;
    while primes.len() < count {
        if primes.iter().all(|p| !c.is_multiple_of(*p)) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

/// Sampled lower estimate of the Clarke derivative `f°(x; d)`:
/// the largest difference quotient `(f(y + t d) - f(y)) / t` over
/// `n_samples` pairs, `y` in `B_{h_max}(x)` and `t` log-spaced in
/// `[h_min, h_max]`.
///
/// The pairs come from a Halton sequence, so the sample set for `n` is a
/// prefix of the one for `n + 1` and the estimate never decreases with
/// `n_samples`. Pairs with a non-finite value are skipped; `-inf` if none
/// remains.
pub fn clarke_estimate(
    objective: &ObjectiveSpec,
    x: &[f64],
    d: &[f64],
    h_min: f64,
    h_max: f64,
    n_samples: usize,
) -> f64 {
    let n = x.len();
    let bases = first_primes(n + 1);
    let log_ratio = (h_max / h_min).ln();
    let mut best = f64::NEG_INFINITY;
    let mut taken = 0;
    let mut index = 1u64;
    while taken < n_samples {
        let v: Vec<f64> = bases[..n]
            .iter()
            .map(|&b| 2.0 * radical_inverse(index, b) - 1.0)
            .collect();
        let w = radical_inverse(index, bases[n]);
        index += 1;
        if v.iter().map(|c| c * c).sum::<f64>() > 1.0 {
            continue;
        }
        taken += 1;
        let t = h_min * (w * log_ratio).exp();
        let y: Vec<f64> = x.iter().zip(&v).map(|(xi, vi)| xi + h_max * vi).collect();
        let yt: Vec<f64> = y.iter().zip(d).map(|(yi, di)| yi + t * di).collect();
        if let (ExtReal::Finite(a), ExtReal::Finite(b)) =
            (objective.value(&yt), objective.value(&y))
        {
            best = best.max((a - b) / t);
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeStats {
    pub n_trials: usize,
    /// Trials whose incumbent entered `I = [-sqrt(2) - 1, 0]`.
    pub n_escaped: usize,
    /// Trials whose final incumbent is within [`CONVERGENCE_TOL`] of `-1`.
    pub n_converged: usize,
    /// Per trial, the first iteration index whose incumbent lies in `I`
    /// (the record count if only the final incumbent does).
    pub first_escape_iterations: Vec<Option<u64>>,
    pub final_incumbents: Vec<f64>,
}

/// Seed of trial `trial` under `master_seed`.
pub fn trial_seed(master_seed: u64, trial: u64) -> u64 {
    mix_seed(splitmix64(master_seed), trial)
}

fn first_escape(trace: &Trace) -> Option<u64> {
    trace
        .records
        .iter()
        .position(|r| r.f_xk <= 0.0)
        .map(|k| k as u64)
        .or_else(|| {
            trace
                .final_value()
                .filter(|&f| f <= 0.0)
                .map(|_| trace.records.len() as u64)
        })
}

/// Runs `n_trials` independent copies of `base_config` on the
/// counterexample, each with a seed derived from `master_seed`, and counts
/// escapes into `I` and convergence to `-1`.
///
/// Trials run on the current rayon pool; results are gathered in trial
/// order, so the statistics do not depend on the worker count.
pub fn monte_carlo_escape(
    base_config: &AlgoConfig,
    objective: &ObjectiveSpec,
    n_trials: usize,
    master_seed: u64,
) -> Result<EscapeStats, AnalysisError> {
    if base_config.revealing_radius.is_none() {
        return Err(ConfigError::new(
            "revealing_radius",
            "the Monte Carlo harness needs the Revealing Poll enabled",
        )
        .into());
    }
    base_config.validate()?;
    let results = (0..n_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let cfg = AlgoConfig {
                seed: trial_seed(master_seed, trial),
                ..base_config.clone()
            };
            let trace = run(&cfg, objective)?;
            Ok((first_escape(&trace), trace.final_point()[0]))
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;

    let first_escape_iterations: Vec<Option<u64>> = results.iter().map(|r| r.0).collect();
    let final_incumbents: Vec<f64> = results.iter().map(|r| r.1).collect();
    Ok(EscapeStats {
        n_trials,
        n_escaped: first_escape_iterations
            .iter()
            .filter(|e| e.is_some())
            .count(),
        n_converged: final_incumbents
            .iter()
            .filter(|x| (*x + 1.0).abs() <= CONVERGENCE_TOL)
            .count(),
        first_escape_iterations,
        final_incumbents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::registry_lookup;

    #[test]
    fn covering_radius_examples() {
        assert_eq!(covering_radius(&[vec![0.0]], &[0.0], 1.0, 201), 1.0);
        let grid = ball_grid(&[0.5], 1.0, 11);
        assert_eq!(covering_radius(&grid, &[0.5], 1.0, 11), 0.0);
        assert_eq!(covering_radius(&[], &[0.0], 1.0, 11), f64::INFINITY);
    }

    #[test]
    fn ball_grid_2d_is_clipped() {
        let g = ball_grid(&[0.0, 0.0], 1.0, 3);
        // corners of the 3x3 grid fall outside the unit disc
        assert_eq!(g.len(), 5);
    }

    #[test]
    fn aitken_on_geometric_sequence() {
        let out = aitken(&[1.25 / 4096.0], &[1.25 / 8192.0], &[1.25 / 16384.0]);
        assert_eq!(out, vec![0.0]);
        // oscillating tail: no extrapolation
        assert_eq!(aitken(&[1.0], &[-1.0], &[0.5]), vec![0.5]);
        // stalled coordinate
        assert_eq!(aitken(&[2.0], &[2.0], &[2.0]), vec![2.0]);
    }

    #[test]
    fn clustering() {
        let dirs = vec![vec![-1.0], vec![1.0], vec![-1.0], vec![1.0]];
        assert_eq!(
            cluster_directions(&dirs, DEFAULT_CLUSTER_TOL),
            vec![vec![-1.0], vec![1.0]]
        );
        let close = vec![
            vec![1.0, 0.0],
            vec![(1e-4f64).cos(), (1e-4f64).sin()],
            vec![0.0, 1.0],
        ];
        assert_eq!(cluster_directions(&close, DEFAULT_CLUSTER_TOL).len(), 2);
    }

    #[test]
    fn no_unsuccessful_iteration() {
        let obj = registry_lookup("counterexample").unwrap();
        let trace = run(&AlgoConfig::counterexample(0), &obj).unwrap();
        assert_eq!(
            extract_refining(&trace, &obj, DEFAULT_CLUSTER_TOL).unwrap_err(),
            AnalysisError::NoUnsuccessfulIteration
        );
    }

    #[test]
    fn closed_form_needs_enough_records() {
        let obj = registry_lookup("counterexample").unwrap();
        let trace = run(&AlgoConfig::counterexample(5), &obj).unwrap();
        assert!(matches!(
            verify_counterexample_closed_form(&trace, 2),
            Err(AnalysisError::TraceTooShort { have: 5, need: 6 })
        ));
        assert!(verify_counterexample_closed_form(&trace, 1).unwrap());
    }

    #[test]
    fn closed_form_spot_value() {
        let obj = registry_lookup("counterexample").unwrap();
        let trace = run(&AlgoConfig::counterexample(8), &obj).unwrap();
        assert_eq!(trace.records[6].x_k, vec![5.0 / 32.0]);
        assert_eq!(trace.records[6].alpha_k, 1.0 / 32.0);
    }

    #[test]
    fn radical_inverse_values() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(1, 3) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(first_primes(5), vec![2, 3, 5, 7, 11]);
    }

    #[test]
    fn monte_carlo_requires_revealing() {
        let obj = registry_lookup("counterexample").unwrap();
        let err = monte_carlo_escape(&AlgoConfig::counterexample(10), &obj, 3, 1).unwrap_err();
        assert!(matches!(err, AnalysisError::Config(e) if e.field == "revealing_radius"));
    }
}
