//! Pluggable pieces of an iteration: Search schedules, Poll direction sets,
//! the uniform-ball sampler behind the Revealing Poll, and forcing functions.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::StepError;

/// Generator used for every random draw in a run.
pub type StepRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `(seed, index)`: `splitmix64(seed ^ splitmix64(index))`.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// Independent generator for iteration `k` of a run seeded with `seed`.
///
/// Each iteration gets its own stream, so whether other steps ran (or how
/// many draws an earlier iteration made) never shifts later draws.
pub fn substream(seed: u64, k: u64) -> StepRng {
    StepRng::seed_from_u64(mix_seed(seed, k))
}

fn unknown(kind: &'static str, name: &str, valid: &[&'static str]) -> StepError {
    StepError::UnknownName {
        kind,
        name: name.to_string(),
        valid: valid.to_vec(),
    }
}

/// Search step generators, keyed by the `search_schedule` config field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchSchedule {
    /// Always the empty set.
    None,
    /// `[]` at even `k`, `[x - 5 alpha]` at odd `k` (one-dimensional).
    Counterexample,
}

impl SearchSchedule {
    pub const NAMES: [&'static str; 2] = ["none", "counterexample"];

    pub fn name(self) -> &'static str {
        match self {
            SearchSchedule::None => "none",
            SearchSchedule::Counterexample => "counterexample",
        }
    }

    /// Dimensions this schedule supports.
    pub fn supports(self, n: usize) -> bool {
        match self {
            SearchSchedule::None => true,
            SearchSchedule::Counterexample => n == 1,
        }
    }

    pub fn points(self, k: u64, x: &[f64], alpha: f64) -> Vec<Vec<f64>> {
        match self {
            SearchSchedule::None => Vec::new(),
            SearchSchedule::Counterexample => counterexample_search(k, x, alpha),
        }
    }
}

impl FromStr for SearchSchedule {
    type Err = StepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(SearchSchedule::None),
            "counterexample" => Ok(SearchSchedule::Counterexample),
            _ => Err(unknown("search schedule", s, &Self::NAMES)),
        }
    }
}

impl fmt::Display for SearchSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Search step of the one-dimensional counterexample: nothing at even
/// iterations, the single point `x - 5 alpha` at odd ones.
pub fn counterexample_search(k: u64, x: &[f64], alpha: f64) -> Vec<Vec<f64>> {
    if k.is_multiple_of(2) {
        Vec::new()
    } else {
        vec![vec![x[0] - 5.0 * alpha]]
    }
}

/// Poll direction generators, keyed by the `poll_directions` config field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PollDirections {
    /// `{-1, +1}` in one dimension.
    Pm1,
    /// `{-e_1, +e_1, ..., -e_n, +e_n}`.
    Coordinate,
}

impl PollDirections {
    pub const NAMES: [&'static str; 2] = ["pm1", "coordinate"];

    pub fn name(self) -> &'static str {
        match self {
            PollDirections::Pm1 => "pm1",
            PollDirections::Coordinate => "coordinate",
        }
    }

    pub fn supports(self, n: usize) -> bool {
        match self {
            PollDirections::Pm1 => n == 1,
            PollDirections::Coordinate => n >= 1,
        }
    }

    pub fn directions(self, k: u64, n: usize) -> Vec<Vec<f64>> {
        match self {
            PollDirections::Pm1 => fixed_poll_directions_1d(k),
            PollDirections::Coordinate => coordinate_directions(n),
        }
    }
}

impl FromStr for PollDirections {
    type Err = StepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pm1" => Ok(PollDirections::Pm1),
            "coordinate" => Ok(PollDirections::Coordinate),
            _ => Err(unknown("poll direction set", s, &Self::NAMES)),
        }
    }
}

impl fmt::Display for PollDirections {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `[-1, +1]` for every iteration.
pub fn fixed_poll_directions_1d(_k: u64) -> Vec<Vec<f64>> {
    vec![vec![-1.0], vec![1.0]]
}

/// The minimal-ish positive basis `±e_i`, ordered `-e_1, +e_1, -e_2, ...`.
pub fn coordinate_directions(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        for sign in [-1.0, 1.0] {
            let mut d = vec![0.0; n];
            d[i] = sign;
            out.push(d);
        }
    }
    out
}

/// Draws `m` points uniformly from the closed ball of radius `radius`
/// centered at the origin of `R^n`.
///
/// Each draw normalizes a standard normal vector onto the unit sphere and
/// scales it by `U^(1/n)`, `U ~ Uniform[0, 1)`; the unit sample is then
/// multiplied by `radius`, so results for radius `R` are exactly `R` times
/// the unit-radius results from the same stream.
pub fn sample_ball_uniform<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    radius: f64,
    m: usize,
) -> Result<Vec<Vec<f64>>, StepError> {
    if m == 0 {
        return Err(StepError::EmptySample);
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(StepError::BadRadius(radius));
    }
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let unit = sample_unit_ball(rng, n);
        out.push(unit.into_iter().map(|c| radius * c).collect());
    }
    Ok(out)
}

fn sample_unit_ball<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let direction = loop {
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            break g.into_iter().map(|v| v / norm).collect::<Vec<_>>();
        }
    };
    let u: f64 = rng.random();
    let scale = if n == 1 { u } else { u.powf(1.0 / n as f64) };
    direction.into_iter().map(|v| v * scale).collect()
}

/// A forcing function: continuous, nondecreasing on `[0, inf)`, with
/// `rho(t) / t -> 0` as `t -> 0`.
pub trait ForcingFunction {
    fn rho(&self, t: f64) -> f64;
}

impl<F: Fn(f64) -> f64> ForcingFunction for F {
    fn rho(&self, t: f64) -> f64 {
        self(t)
    }
}

impl ForcingFunction for Forcing {
    fn rho(&self, t: f64) -> f64 {
        self.eval(t)
    }
}

/// Bundled forcing functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Forcing {
    /// `rho(t) = 0`: simple decrease.
    Zero,
    /// `rho(t) = 1e-4 t^2`.
    Quadratic,
}

impl Forcing {
    pub const NAMES: [&'static str; 2] = ["zero", "quadratic"];

    pub fn name(self) -> &'static str {
        match self {
            Forcing::Zero => "zero",
            Forcing::Quadratic => "quadratic",
        }
    }

    pub fn eval(self, t: f64) -> f64 {
        match self {
            Forcing::Zero => 0.0,
            Forcing::Quadratic => 1e-4 * t * t,
        }
    }
}

impl FromStr for Forcing {
    type Err = StepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        forcing_lookup(s)
    }
}

impl fmt::Display for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn forcing_lookup(name: &str) -> Result<Forcing, StepError> {
    match name {
        "zero" => Ok(Forcing::Zero),
        "quadratic" => Ok(Forcing::Quadratic),
        _ => Err(unknown("forcing function", name, &Forcing::NAMES)),
    }
}
