//! The direct-search iteration loop: Search, Revealing Poll, Poll, then the
//! step-size update. Leaving `revealing_radius` unset gives the classical
//! directional direct-search method.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, EngineError};
use crate::objective::{ExtReal, ObjectiveSpec};
use crate::steps::{
    sample_ball_uniform, substream, Forcing, ForcingFunction, PollDirections, SearchSchedule,
};

/// Every free parameter of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub x0: Vec<f64>,
    pub alpha0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
    /// Radius of the Revealing Poll ball; `None` disables the step.
    pub revealing_radius: Option<f64>,
    /// Trial points drawn per Revealing Poll.
    pub revealing_count: usize,
    pub search_schedule: SearchSchedule,
    pub poll_directions: PollDirections,
    pub forcing: Forcing,
    pub seed: u64,
    pub max_iterations: u64,
    /// Stop before any iteration whose step size is below this.
    pub alpha_min: f64,
}

impl AlgoConfig {
    /// The one-dimensional instance that walks into the discontinuity of the
    /// counterexample: `x0 = 5/4`, `alpha0 = 1/4`, poll `{-1, 1}`, step
    /// halved on failure and kept on success, search `x - 5 alpha` at odd
    /// iterations, no Revealing Poll.
    pub fn counterexample(max_iterations: u64) -> Self {
        Self {
            x0: vec![1.25],
            alpha0: 0.25,
            beta1: 0.5,
            beta2: 0.5,
            gamma: 1.0,
            revealing_radius: None,
            revealing_count: 1,
            search_schedule: SearchSchedule::Counterexample,
            poll_directions: PollDirections::Pm1,
            forcing: Forcing::Zero,
            seed: 0,
            max_iterations,
            alpha_min: 0.0,
        }
    }

    /// The counterexample instance plus a Revealing Poll of radius 2 with a
    /// single trial point per iteration.
    pub fn revealing(seed: u64, max_iterations: u64) -> Self {
        Self {
            revealing_radius: Some(2.0),
            revealing_count: 1,
            seed,
            alpha_min: 1e-9,
            ..Self::counterexample(max_iterations)
        }
    }

    pub fn dimension(&self) -> usize {
        self.x0.len()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = self.dimension();
        if n == 0 {
            return Err(ConfigError::new("x0", "must have at least one coordinate"));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(ConfigError::new("x0", "coordinates must be finite"));
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(ConfigError::new("alpha0", "must be finite and > 0"));
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0) {
            return Err(ConfigError::new("beta1", "must lie in (0, 1)"));
        }
        if !(self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err(ConfigError::new("beta2", "must lie in (0, 1)"));
        }
        if self.beta1 > self.beta2 {
            return Err(ConfigError::new("beta1", "must not exceed beta2"));
        }
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return Err(ConfigError::new("gamma", "must be finite and >= 1"));
        }
        if let Some(r) = self.revealing_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(ConfigError::new(
                    "revealing_radius",
                    "must be finite and > 0",
                ));
            }
            if self.revealing_count == 0 {
                return Err(ConfigError::new("revealing_count", "must be >= 1"));
            }
        }
        if !self.search_schedule.supports(n) {
            return Err(ConfigError::new(
                "search_schedule",
                format!("`{}` does not support dimension {n}", self.search_schedule),
            ));
        }
        if !self.poll_directions.supports(n) {
            return Err(ConfigError::new(
                "poll_directions",
                format!("`{}` does not support dimension {n}", self.poll_directions),
            ));
        }
        if !(self.alpha_min >= 0.0) || self.alpha_min.is_infinite() {
            return Err(ConfigError::new("alpha_min", "must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Search,
    RevealingPoll,
    Poll,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialPoint {
    pub point: Vec<f64>,
    pub value: ExtReal,
    pub in_domain: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub step_kind: StepKind,
    pub trial_points: Vec<TrialPoint>,
    /// Best eligible trial, whether or not it passed the decrease test.
    pub winner: Option<usize>,
    pub success: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: u64,
    pub x_k: Vec<f64>,
    pub alpha_k: f64,
    pub f_xk: f64,
    /// Executed steps in order. An empty Search set leaves no outcome.
    pub outcomes: Vec<StepOutcome>,
    pub success: bool,
    pub x_next: Vec<f64>,
    pub alpha_next: f64,
    pub f_next: f64,
}

impl IterationRecord {
    pub fn outcome(&self, kind: StepKind) -> Option<&StepOutcome> {
        self.outcomes.iter().find(|o| o.step_kind == kind)
    }

    /// All trial points of this iteration, across steps.
    pub fn trial_points(&self) -> impl Iterator<Item = &TrialPoint> {
        self.outcomes.iter().flat_map(|o| o.trial_points.iter())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxIterations,
    AlphaMin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub config: AlgoConfig,
    pub objective_name: String,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

impl Trace {
    /// Final incumbent (`x0` for an empty trace).
    pub fn final_point(&self) -> &[f64] {
        self.records
            .last()
            .map(|r| r.x_next.as_slice())
            .unwrap_or(&self.config.x0)
    }

    pub fn final_value(&self) -> Option<f64> {
        self.records.last().map(|r| r.f_next)
    }

    /// Objective evaluations logged in the trace: `x0` plus every in-domain
    /// trial point.
    pub fn logged_evaluations(&self) -> usize {
        1 + self
            .records
            .iter()
            .flat_map(|r| r.trial_points())
            .filter(|t| t.in_domain)
            .count()
    }

    /// Checks the structural invariants every trace produced by [`run`]
    /// satisfies. Returns a description of the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let cfg = &self.config;
        for (i, r) in self.records.iter().enumerate() {
            if r.k != i as u64 {
                return Err(format!("record {i} has k = {}", r.k));
            }
            if let Some(next) = self.records.get(i + 1) {
                if next.x_k != r.x_next || next.alpha_k.to_bits() != r.alpha_next.to_bits() {
                    return Err(format!("records {i} and {} are not chained", i + 1));
                }
                if next.f_xk.to_bits() != r.f_next.to_bits() {
                    return Err(format!("f values of records {i} and {} differ", i + 1));
                }
            }
            let successes: Vec<usize> = r
                .outcomes
                .iter()
                .enumerate()
                .filter(|(_, o)| o.success)
                .map(|(j, _)| j)
                .collect();
            if successes.len() > 1 {
                return Err(format!("iteration {i} has several successful steps"));
            }
            if let Some(&j) = successes.first() {
                if j + 1 != r.outcomes.len() {
                    return Err(format!("iteration {i} ran steps after a success"));
                }
            }
            let mut last_kind = None;
            for o in &r.outcomes {
                if last_kind.is_some_and(|prev| order(prev) >= order(o.step_kind)) {
                    return Err(format!("iteration {i} has steps out of order"));
                }
                last_kind = Some(o.step_kind);
                if o.success && o.winner.is_none() {
                    return Err(format!("iteration {i}: success without winner"));
                }
                if let Some(w) = o.winner {
                    let t = o.trial_points.get(w).ok_or("winner out of range")?;
                    if !t.in_domain || !t.value.is_finite() {
                        return Err(format!("iteration {i}: ineligible winner"));
                    }
                }
            }
            if r.success != !successes.is_empty() {
                return Err(format!("iteration {i}: success flag disagrees with steps"));
            }
            if r.success {
                let o = &r.outcomes[successes[0]];
                let t = &o.trial_points[o.winner.unwrap()];
                if t.point != r.x_next {
                    return Err(format!("iteration {i}: x_next is not the winner"));
                }
                let dist = distance(&r.x_next, &r.x_k);
                if !sufficient_decrease(ExtReal::Finite(r.f_next), r.f_xk, dist, cfg.forcing) {
                    return Err(format!("iteration {i}: no sufficient decrease"));
                }
                if !(r.alpha_next >= r.alpha_k && r.alpha_next <= cfg.gamma * r.alpha_k) {
                    return Err(format!(
                        "iteration {i}: step size not in [alpha, gamma alpha]"
                    ));
                }
            } else {
                if r.x_next != r.x_k || r.f_next.to_bits() != r.f_xk.to_bits() {
                    return Err(format!("iteration {i}: incumbent moved on failure"));
                }
                if !(r.alpha_next >= cfg.beta1 * r.alpha_k && r.alpha_next <= cfg.beta2 * r.alpha_k)
                {
                    return Err(format!(
                        "iteration {i}: step size not in [beta1 alpha, beta2 alpha]"
                    ));
                }
            }
        }
        Ok(())
    }
}

fn order(kind: StepKind) -> u8 {
    match kind {
        StepKind::Search => 0,
        StepKind::RevealingPoll => 1,
        StepKind::Poll => 2,
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `f_t < f_x - rho(dist)`, false whenever `f_t` is `+inf`.
pub fn sufficient_decrease<F: ForcingFunction>(
    f_t: ExtReal,
    f_x: f64,
    dist: f64,
    forcing: F,
) -> bool {
    match f_t {
        ExtReal::Finite(v) => v < f_x - forcing.rho(dist),
        ExtReal::PosInf => false,
    }
}

/// Index of the lowest finite in-domain value; ties go to the earliest trial.
pub fn select_candidate(trials: &[TrialPoint]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, t) in trials.iter().enumerate() {
        if !t.in_domain {
            continue;
        }
        if let ExtReal::Finite(v) = t.value {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// `gamma * alpha` on success, `beta2 * alpha` on failure.
pub fn step_size_update(alpha: f64, success: bool, config: &AlgoConfig) -> f64 {
    if success {
        config.gamma * alpha
    } else {
        config.beta2 * alpha
    }
}

fn evaluate_step(
    kind: StepKind,
    points: Vec<Vec<f64>>,
    x: &[f64],
    fx: f64,
    forcing: Forcing,
    objective: &ObjectiveSpec,
) -> StepOutcome {
    let trial_points: Vec<TrialPoint> = points
        .into_iter()
        .map(|point| {
            let e = objective.evaluate(&point);
            TrialPoint {
                point,
                value: e.value,
                in_domain: e.in_domain,
            }
        })
        .collect();
    let winner = select_candidate(&trial_points);
    let success = winner.is_some_and(|w| {
        let t = &trial_points[w];
        sufficient_decrease(t.value, fx, distance(&t.point, x), forcing)
    });
    StepOutcome {
        step_kind: kind,
        trial_points,
        winner,
        success,
    }
}

/// Runs the method until `max_iterations` records exist or the step size
/// drops below `alpha_min`.
///
/// Deterministic: the same config (seed included) always yields the same
/// trace.
pub fn run(config: &AlgoConfig, objective: &ObjectiveSpec) -> Result<Trace, EngineError> {
    config.validate()?;
    let n = config.dimension();
    if objective.dimension() != n {
        return Err(EngineError::DimensionMismatch {
            objective: objective.dimension(),
            x0: n,
        });
    }
    let start = objective.evaluate(&config.x0);
    if !start.in_domain {
        return Err(EngineError::InitialOutOfDomain);
    }
    let mut fx = start.value.finite().ok_or(EngineError::InitialInfinite)?;
    let mut x = config.x0.clone();
    let mut alpha = config.alpha0;
    let mut records = Vec::new();

    let termination = loop {
        let k = records.len() as u64;
        if k >= config.max_iterations {
            break Termination::MaxIterations;
        }
        // a step size that underflowed to zero can never recover
        if alpha < config.alpha_min || alpha == 0.0 {
            break Termination::AlphaMin;
        }

        let mut outcomes = Vec::with_capacity(3);
        let mut accepted: Option<(Vec<f64>, f64)> = None;

        let search = config.search_schedule.points(k, &x, alpha);
        if !search.is_empty() {
            let o = evaluate_step(StepKind::Search, search, &x, fx, config.forcing, objective);
            accepted = winner_of(&o);
            outcomes.push(o);
        }

        if accepted.is_none() {
            if let Some(radius) = config.revealing_radius {
                let mut rng = substream(config.seed, k);
                let offsets = sample_ball_uniform(&mut rng, n, radius, config.revealing_count)
                    .expect("radius and count validated");
                let points = offsets
                    .into_iter()
                    .map(|d| x.iter().zip(&d).map(|(xi, di)| xi + di).collect())
                    .collect();
                let o = evaluate_step(
                    StepKind::RevealingPoll,
                    points,
                    &x,
                    fx,
                    config.forcing,
                    objective,
                );
                accepted = winner_of(&o);
                outcomes.push(o);
            }
        }

        if accepted.is_none() {
            let points = config
                .poll_directions
                .directions(k, n)
                .into_iter()
                .map(|d| x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect())
                .collect();
            let o = evaluate_step(StepKind::Poll, points, &x, fx, config.forcing, objective);
            accepted = winner_of(&o);
            outcomes.push(o);
        }

        let success = accepted.is_some();
        let alpha_next = step_size_update(alpha, success, config);
        let (x_next, f_next) = accepted.unwrap_or_else(|| (x.clone(), fx));
        records.push(IterationRecord {
            k,
            x_k: x,
            alpha_k: alpha,
            f_xk: fx,
            outcomes,
            success,
            x_next: x_next.clone(),
            alpha_next,
            f_next,
        });
        x = x_next;
        fx = f_next;
        alpha = alpha_next;
    };

    Ok(Trace {
        config: config.clone(),
        objective_name: objective.name().to_string(),
        records,
        termination,
    })
}

fn winner_of(o: &StepOutcome) -> Option<(Vec<f64>, f64)> {
    if !o.success {
        return None;
    }
    let t = &o.trial_points[o.winner?];
    Some((t.point.clone(), t.value.finite()?))
}
