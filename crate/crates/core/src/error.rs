use thiserror::Error;

/// Errors raised while building or evaluating objectives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("unknown objective `{name}` (valid names: {})", valid.join(", "))]
    UnknownObjective {
        name: String,
        valid: Vec<&'static str>,
    },
    #[error("branch index requires a finite x > 0, got {0}")]
    Domain(f64),
}

/// An `AlgoConfig` field that failed validation.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid `{field}`: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

impl ConfigError {
    pub(crate) fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("unknown {kind} `{name}` (valid names: {})", valid.join(", "))]
    UnknownName {
        kind: &'static str,
        name: String,
        valid: Vec<&'static str>,
    },
    #[error("ball sampler needs at least one point")]
    EmptySample,
    #[error("ball radius must be finite and > 0, got {0}")]
    BadRadius(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("objective has dimension {objective} but x0 has dimension {x0}")]
    DimensionMismatch { objective: usize, x0: usize },
    #[error("initial point is outside the domain")]
    InitialOutOfDomain,
    #[error("f(x0) is not finite")]
    InitialInfinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("trace has no unsuccessful iteration")]
    NoUnsuccessfulIteration,
    #[error("trace has {have} iterations, need at least {need}")]
    TraceTooShort { have: usize, need: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}
