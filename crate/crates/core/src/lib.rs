//! Directional direct search for nonsmooth, possibly discontinuous,
//! objectives.
//!
//! The crate bundles a one-dimensional objective on which the classical
//! method converges to a discontinuity without ever sampling the branch
//! below it, the iteration engine (with an optional randomized Revealing
//! Poll that repairs this), and the analysis routines used to inspect
//! traces: refining subsequences, discontinuity gaps, covering radii,
//! Clarke derivative estimates and a Monte Carlo escape harness.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod objective;
pub mod steps;

pub use analysis::{EscapeStats, RefinementReport};
pub use engine::{
    run, AlgoConfig, IterationRecord, StepKind, StepOutcome, Termination, Trace, TrialPoint,
};
pub use error::{AnalysisError, ConfigError, EngineError, ObjectiveError, StepError};
pub use objective::{registry_lookup, ExtReal, ObjectiveSpec, Polynomial};
pub use steps::{Forcing, ForcingFunction, PollDirections, SearchSchedule};
