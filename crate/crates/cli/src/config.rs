//! Experiment config files.
//!
//! A config is a TOML document with three sections. Unknown keys anywhere
//! are rejected.
//!
//! ```toml
//! [objective]
//! name = "counterexample"
//!
//! [algorithm]
//! x0 = [1.25]
//! alpha0 = 0.25
//! beta1 = 0.5
//! beta2 = 0.5
//! gamma = 1.0
//! revealing_radius = 2.0   # omit to disable the Revealing Poll
//! revealing_count = 1      # default 1
//! search_schedule = "counterexample"
//! poll_directions = "pm1"
//! forcing = "zero"
//! seed = 42
//! max_iterations = 500
//! alpha_min = 1e-9
//!
//! [output]                 # optional
//! trace_path = "trace.jsonl"
//! format = "jsonl"         # or "json"
//! ```

use std::path::{Path, PathBuf};

use ddsm_core::{AlgoConfig, Forcing, PollDirections, SearchSchedule};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::trace_io::TraceFormat;

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ObjectiveSection {
    name: String,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct AlgorithmSection {
    x0: Vec<f64>,
    alpha0: f64,
    beta1: f64,
    beta2: f64,
    gamma: f64,
    #[serde(default)]
    revealing_radius: Option<f64>,
    #[serde(default = "default_revealing_count")]
    revealing_count: usize,
    search_schedule: SearchSchedule,
    poll_directions: PollDirections,
    forcing: Forcing,
    seed: u64,
    max_iterations: u64,
    alpha_min: f64,
}

fn default_revealing_count() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_trace_path")]
    pub trace_path: PathBuf,
    #[serde(default)]
    pub format: TraceFormat,
}

fn default_trace_path() -> PathBuf {
    PathBuf::from("trace.jsonl")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            trace_path: default_trace_path(),
            format: TraceFormat::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    objective: ObjectiveSection,
    algorithm: AlgorithmSection,
    #[serde(default)]
    output: OutputSection,
}

/// A parsed and validated experiment config.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub objective: String,
    pub algorithm: AlgoConfig,
    pub output: OutputSection,
}

impl ExperimentConfig {
    /// Parses and validates config text. `origin` only labels diagnostics.
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let config_err = |message: String| CliError::Config {
            path: origin.to_path_buf(),
            message,
        };
        let raw: RawConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        let a = raw.algorithm;
        let algorithm = AlgoConfig {
            x0: a.x0,
            alpha0: a.alpha0,
            beta1: a.beta1,
            beta2: a.beta2,
            gamma: a.gamma,
            revealing_radius: a.revealing_radius,
            revealing_count: a.revealing_count,
            search_schedule: a.search_schedule,
            poll_directions: a.poll_directions,
            forcing: a.forcing,
            seed: a.seed,
            max_iterations: a.max_iterations,
            alpha_min: a.alpha_min,
        };
        algorithm
            .validate()
            .map_err(|e| config_err(format!("[algorithm] {e}")))?;
        let objective = ddsm_core::registry_lookup(&raw.objective.name)
            .map_err(|e| config_err(format!("[objective] name: {e}")))?;
        if objective.dimension() != algorithm.dimension() {
            return Err(config_err(format!(
                "[algorithm] x0: objective `{}` has dimension {}, x0 has {}",
                raw.objective.name,
                objective.dimension(),
                algorithm.dimension()
            )));
        }
        Ok(Self {
            objective: raw.objective.name,
            algorithm,
            output: raw.output,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }
}
