//! Objective functions: the piecewise counterexample built from a scaled
//! quartic, a few auxiliary test functions, and the extended-real values
//! the optimizer compares.
//!
//! The counterexample is
//!
//! ```text
//! f(x) = (x + 1)^2 - 2          if x <= 0
//! f(x) = 2^l * p(x / 2^l)       if x in 2^l * [1, 2), l an integer
//! p(x) = -18 + 60x - 69x^2 + 34x^3 - 6x^4
//! ```
//!
//! `f` is continuous on `(0, inf)` with a local minimizer at `5/4 * 2^l` on
//! every dyadic interval, and lower semicontinuous at `0` where it jumps from
//! a right-limit of `0` down to `f(0) = -1`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ObjectiveError;

/// A value in `R ∪ {+inf}`.
///
/// `PosInf` compares greater than every finite value. Only comparisons are
/// meaningful; there is no arithmetic on this type.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    /// Wraps a raw float. Anything non-finite (NaN, ±inf) becomes `PosInf`.
    pub fn from_f64(v: f64) -> Self {
        if v.is_finite() {
            ExtReal::Finite(v)
        } else {
            ExtReal::PosInf
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInf => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
            (ExtReal::Finite(_), ExtReal::PosInf) => Some(Ordering::Less),
            (ExtReal::PosInf, ExtReal::Finite(_)) => Some(Ordering::Greater),
            (ExtReal::PosInf, ExtReal::PosInf) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInf => f.write_str("+inf"),
        }
    }
}

const POS_INF_TAG: &str = "+inf";

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => serializer.serialize_f64(*v),
            ExtReal::PosInf => serializer.serialize_str(POS_INF_TAG),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Tag(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(v) if v.is_finite() => Ok(ExtReal::Finite(v)),
            Repr::Tag(s) if s == POS_INF_TAG => Ok(ExtReal::PosInf),
            Repr::Num(v) => Err(serde::de::Error::custom(format!("non-finite number {v}"))),
            Repr::Tag(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"{POS_INF_TAG}\", got \"{s}\""
            ))),
        }
    }
}

/// Real polynomial with coefficients in ascending degree order.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coefficients: Vec<f64>,
}

impl Polynomial {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }

    /// The quartic `p` used on every dyadic branch of the counterexample.
    pub fn counterexample() -> Self {
        Self::new(P_COEFFS.to_vec())
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Horner evaluation, highest degree first. This order is fixed so that
    /// traces are bit-reproducible.
    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.coefficients, x)
    }

    pub fn derivative(&self) -> Polynomial {
        let coefficients = self
            .coefficients
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| c * i as f64)
            .collect();
        Polynomial::new(coefficients)
    }
}

fn horner(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

const P_COEFFS: [f64; 5] = [-18.0, 60.0, -69.0, 34.0, -6.0];
const DP_COEFFS: [f64; 4] = [60.0, -138.0, 102.0, -24.0];

/// `p(x)`; meaningful on `[1, 2]`.
pub fn p_eval(x: f64) -> f64 {
    horner(&P_COEFFS, x)
}

/// `p'(x) = 60 - 138x + 102x^2 - 24x^3`.
pub fn p_deriv(x: f64) -> f64 {
    horner(&DP_COEFFS, x)
}

/// `2^exp` built directly from its bit pattern, exact over the whole
/// binary64 range including subnormals.
pub(crate) fn pow2(exp: i32) -> f64 {
    if exp > 1023 {
        f64::INFINITY
    } else if exp >= -1022 {
        f64::from_bits(((exp + 1023) as u64) << 52)
    } else if exp >= -1074 {
        f64::from_bits(1u64 << (exp + 1074))
    } else {
        0.0
    }
}

/// The unique `l` with `2^l <= x < 2^(l+1)`, read from the binary exponent.
pub fn branch_index(x: f64) -> Result<i32, ObjectiveError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(ObjectiveError::Domain(x));
    }
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    if biased != 0 {
        Ok(biased - 1023)
    } else {
        // subnormal: the leading set bit of the mantissa gives the exponent
        let mantissa = bits & ((1u64 << 52) - 1);
        Ok(63 - mantissa.leading_zeros() as i32 - 1074)
    }
}

/// The counterexample objective. Total on the reals; non-finite input gives NaN.
pub fn f_eval(x: f64) -> f64 {
    if x <= 0.0 {
        let s = x + 1.0;
        return s * s - 2.0;
    }
    match branch_index(x) {
        Ok(l) => {
            let scale = pow2(l);
            scale * p_eval(x / scale)
        }
        Err(_) => f64::NAN,
    }
}

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type DomainOracle = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Outcome of evaluating an objective at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: ExtReal,
    pub in_domain: bool,
}

/// An objective `f: R^n -> R ∪ {+inf}` together with a domain membership
/// oracle. Points outside the domain are never passed to the evaluator.
#[derive(Clone)]
pub struct ObjectiveSpec {
    name: String,
    dimension: usize,
    evaluator: Evaluator,
    domain: DomainOracle,
}

impl fmt::Debug for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveSpec")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .finish_non_exhaustive()
    }
}

impl ObjectiveSpec {
    /// An unconstrained objective (domain is all of `R^n`).
    pub fn new<F>(name: impl Into<String>, dimension: usize, evaluator: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            dimension,
            evaluator: Arc::new(evaluator),
            domain: Arc::new(|_| true),
        }
    }

    pub fn with_domain<D>(mut self, oracle: D) -> Self
    where
        D: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        self.domain = Arc::new(oracle);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (self.domain)(x)
    }

    /// Evaluates `x`, or reports it as out of domain with value `+inf`
    /// without calling the evaluator.
    pub fn evaluate(&self, x: &[f64]) -> Evaluation {
        if !self.contains(x) {
            return Evaluation {
                value: ExtReal::PosInf,
                in_domain: false,
            };
        }
        Evaluation {
            value: ExtReal::from_f64((self.evaluator)(x)),
            in_domain: true,
        }
    }

    pub fn value(&self, x: &[f64]) -> ExtReal {
        self.evaluate(x).value
    }
}

/// Names accepted by [`registry_lookup`].
pub const OBJECTIVE_NAMES: [&str; 4] = ["counterexample", "neg_abs", "abs", "quadratic_1d"];

/// Looks up one of the bundled one-dimensional objectives.
///
/// * `counterexample`: the piecewise function `f` above.
/// * `neg_abs`: `x -> -|x|`, whose Clarke derivative at 0 is 1 in both directions.
/// * `abs`: `x -> |x|`.
/// * `quadratic_1d`: `x -> (x + 1)^2 - 2` on the whole line.
pub fn registry_lookup(name: &str) -> Result<ObjectiveSpec, ObjectiveError> {
    let spec = match name {
        "counterexample" => ObjectiveSpec::new(name, 1, |x: &[f64]| f_eval(x[0])),
        "neg_abs" => ObjectiveSpec::new(name, 1, |x: &[f64]| -x[0].abs()),
        "abs" => ObjectiveSpec::new(name, 1, |x: &[f64]| x[0].abs()),
        "quadratic_1d" => ObjectiveSpec::new(name, 1, |x: &[f64]| {
            let s = x[0] + 1.0;
            s * s - 2.0
        }),
        _ => {
            return Err(ObjectiveError::UnknownObjective {
                name: name.to_string(),
                valid: OBJECTIVE_NAMES.to_vec(),
            })
        }
    };
    Ok(spec)
}
