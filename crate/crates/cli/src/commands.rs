//! Subcommand implementations. Each writes its report to `out` and returns
//! an error carrying the exit code on failure.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use ddsm_core::analysis::{
    closed_form_mismatch, extract_refining, monte_carlo_escape, EscapeStats, RefinementReport,
};
use ddsm_core::{registry_lookup, run, AnalysisError, EngineError, Trace};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::trace_io::{read_trace, write_trace, TraceFormat};

fn engine_error(e: EngineError) -> CliError {
    match e {
        EngineError::InitialInfinite | EngineError::InitialOutOfDomain => {
            CliError::Objective(e.to_string())
        }
        EngineError::Config(_) | EngineError::DimensionMismatch { .. } => {
            CliError::Input(e.to_string())
        }
    }
}

fn io_out(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

/// Runs a config and writes its trace. `trace_path`/`format` override the
/// config's `[output]` section.
pub fn cmd_run(
    config_path: &Path,
    trace_path: Option<&Path>,
    format: Option<TraceFormat>,
    out: &mut dyn Write,
) -> Result<Trace, CliError> {
    let cfg = ExperimentConfig::load(config_path)?;
    let objective = registry_lookup(&cfg.objective).map_err(|e| CliError::Input(e.to_string()))?;
    let trace = run(&cfg.algorithm, &objective).map_err(engine_error)?;
    let path: PathBuf = trace_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output.trace_path.clone());
    write_trace(&trace, format.unwrap_or(cfg.output.format), &path)?;
    writeln!(
        out,
        "wrote {} iterations ({:?}) to {}",
        trace.records.len(),
        trace.termination,
        path.display()
    )
    .map_err(io_out)?;
    Ok(trace)
}

#[derive(Clone, Debug, Default)]
pub struct AnalyzeOptions {
    pub cluster_tol: Option<f64>,
    pub verify_lemma: Option<u64>,
    /// `(expected gap, tolerance)`.
    pub expect_gap: Option<(f64, f64)>,
}

fn fmt_point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|v| v.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn print_report(trace: &Trace, rep: &RefinementReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "objective: {}", trace.objective_name)?;
    writeln!(out, "iterations: {}", trace.records.len())?;
    writeln!(out, "termination: {:?}", trace.termination)?;
    writeln!(
        out,
        "unsuccessful_count: {}",
        rep.unsuccessful_indices.len()
    )?;
    writeln!(out, "last_incumbent: {}", fmt_point(&rep.last_incumbent))?;
    writeln!(out, "refined_point: {}", fmt_point(&rep.refined_point))?;
    writeln!(out, "alpha_tail: {}", rep.alpha_tail)?;
    let dirs: Vec<String> = rep
        .refining_directions
        .iter()
        .map(|d| fmt_point(d))
        .collect();
    writeln!(out, "refining_directions: [{}]", dirs.join(", "))?;
    let tail_start = rep.f_tail.len().saturating_sub(5);
    let tail: Vec<String> = rep.f_tail[tail_start..]
        .iter()
        .map(|v| v.to_string())
        .collect();
    writeln!(out, "f_tail: [{}]", tail.join(", "))?;
    writeln!(out, "f_limit: {}", rep.f_limit)?;
    writeln!(out, "f_refined: {}", rep.f_refined)?;
    writeln!(out, "gap: {}", rep.gap)
}

/// Prints the refinement report of a stored trace and runs the optional
/// checks. A failed check is an [`CliError::Expectation`].
pub fn cmd_analyze(
    trace_path: &Path,
    options: &AnalyzeOptions,
    out: &mut dyn Write,
) -> Result<RefinementReport, CliError> {
    let trace = read_trace(trace_path)?;
    let objective =
        registry_lookup(&trace.objective_name).map_err(|e| CliError::Input(e.to_string()))?;
    let tol = options
        .cluster_tol
        .unwrap_or(ddsm_core::analysis::DEFAULT_CLUSTER_TOL);
    let rep =
        extract_refining(&trace, &objective, tol).map_err(|e| CliError::Input(e.to_string()))?;
    print_report(&trace, &rep, out).map_err(io_out)?;

    let mut failures = Vec::new();
    if let Some(q_max) = options.verify_lemma {
        match closed_form_mismatch(&trace, q_max) {
            Ok(None) => writeln!(out, "lemma-verified q=0..{q_max}").map_err(io_out)?,
            Ok(Some(why)) => {
                writeln!(out, "lemma-failed: {why}").map_err(io_out)?;
                failures.push(format!("closed form does not hold: {why}"));
            }
            Err(e) => return Err(CliError::Input(e.to_string())),
        }
    }
    if let Some((expected, tol)) = options.expect_gap {
        let diff = (rep.gap - expected).abs();
        if diff <= tol {
            writeln!(out, "gap-check: pass (|{} - {expected}| <= {tol})", rep.gap)
                .map_err(io_out)?;
        } else {
            writeln!(out, "gap-check: fail (|{} - {expected}| > {tol})", rep.gap)
                .map_err(io_out)?;
            failures.push(format!("gap {} not within {tol} of {expected}", rep.gap));
        }
    }
    if failures.is_empty() {
        Ok(rep)
    } else {
        Err(CliError::Expectation(failures.join("; ")))
    }
}

/// First-escape histogram: bin start -> count, plus the number of trials
/// that never escaped.
pub fn escape_histogram(stats: &EscapeStats, bin_width: u64) -> (BTreeMap<u64, usize>, usize) {
    let mut bins = BTreeMap::new();
    let mut never = 0;
    for e in &stats.first_escape_iterations {
        match e {
            Some(k) => *bins.entry(k / bin_width * bin_width).or_insert(0) += 1,
            None => never += 1,
        }
    }
    (bins, never)
}

fn print_escape_stats(
    stats: &EscapeStats,
    master_seed: u64,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    writeln!(out, "trials: {}", stats.n_trials)?;
    writeln!(out, "master_seed: {master_seed}")?;
    writeln!(out, "escaped: {}/{}", stats.n_escaped, stats.n_trials)?;
    writeln!(out, "converged: {}/{}", stats.n_converged, stats.n_trials)?;
    let (bins, never) = escape_histogram(stats, HISTOGRAM_BIN);
    writeln!(out, "first_escape_histogram:")?;
    for (start, count) in bins {
        writeln!(out, "  [{start}, {}): {count}", start + HISTOGRAM_BIN)?;
    }
    writeln!(out, "  never: {never}")
}

const HISTOGRAM_BIN: u64 = 10;

/// Runs the escape experiment. Fails with [`CliError::Expectation`] when
/// some trial never escaped.
pub fn cmd_montecarlo(
    config_path: &Path,
    n_trials: usize,
    master_seed: u64,
    workers: Option<usize>,
    out: &mut dyn Write,
) -> Result<EscapeStats, CliError> {
    let cfg = ExperimentConfig::load(config_path)?;
    if cfg.objective != "counterexample" {
        return Err(CliError::Config {
            path: config_path.to_path_buf(),
            message: format!(
                "[objective] name: escape statistics are defined for `counterexample`, got `{}`",
                cfg.objective
            ),
        });
    }
    if cfg.algorithm.revealing_radius.is_none() {
        return Err(CliError::Config {
            path: config_path.to_path_buf(),
            message: "[algorithm] revealing_radius: required by montecarlo".into(),
        });
    }
    let objective = registry_lookup(&cfg.objective).map_err(|e| CliError::Input(e.to_string()))?;
    let go = || monte_carlo_escape(&cfg.algorithm, &objective, n_trials, master_seed);
    let result = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| CliError::Input(e.to_string()))?
            .install(go),
        None => go(),
    };
    let stats = result.map_err(|e| match e {
        AnalysisError::Engine(e) => engine_error(e),
        e => CliError::Input(e.to_string()),
    })?;

    print_escape_stats(&stats, master_seed, out).map_err(io_out)?;

    if stats.n_escaped < stats.n_trials {
        return Err(CliError::Expectation(format!(
            "{} of {} trials never escaped",
            stats.n_trials - stats.n_escaped,
            stats.n_trials
        )));
    }
    Ok(stats)
}

/// Evenly spaced grid with exact endpoints.
pub fn sample_grid(x_min: f64, x_max: f64, n_points: usize) -> Vec<f64> {
    let last = (n_points - 1) as f64;
    (0..n_points)
        .map(|i| match i {
            0 => x_min,
            i if i == n_points - 1 => x_max,
            i => (x_min * (last - i as f64) + x_max * i as f64) / last,
        })
        .collect()
}

/// Writes `x,f` rows of a one-dimensional objective on a uniform grid.
pub fn cmd_sample(
    objective_name: &str,
    x_min: f64,
    x_max: f64,
    n_points: usize,
    out_path: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let objective = registry_lookup(objective_name).map_err(|e| CliError::Input(e.to_string()))?;
    if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
        return Err(CliError::Input(format!(
            "x_min must be < x_max (got {x_min}, {x_max})"
        )));
    }
    if n_points < 2 {
        return Err(CliError::Input(format!(
            "n_points must be >= 2 (got {n_points})"
        )));
    }
    let mut writer =
        csv::Writer::from_path(out_path).map_err(|e| CliError::Input(e.to_string()))?;
    let csv_err = |e: csv::Error| CliError::Input(format!("{}: {e}", out_path.display()));
    writer.write_record(["x", "f"]).map_err(csv_err)?;
    for x in sample_grid(x_min, x_max, n_points) {
        let value = objective.value(&[x]);
        writer
            .write_record([x.to_string(), value.to_string()])
            .map_err(csv_err)?;
    }
    writer.flush().map_err(|e| CliError::io(out_path, e))?;
    writeln!(out, "wrote {n_points} rows to {}", out_path.display()).map_err(io_out)?;
    Ok(())
}
