use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ddsm_cli::commands::{cmd_analyze, cmd_montecarlo, cmd_run, cmd_sample, AnalyzeOptions};
use ddsm_cli::trace_io::TraceFormat;
use ddsm_cli::CliError;

#[derive(Parser)]
#[command(
    name = "ddsm",
    version,
    about = "Directional direct search experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its trace.
    Run {
        config: PathBuf,
        /// Override `[output] trace_path`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override `[output] format`.
        #[arg(long, value_parser = parse_format)]
        format: Option<TraceFormat>,
    },
    /// Report the refining subsequence and discontinuity gap of a trace.
    Analyze {
        trace: PathBuf,
        /// Angular tolerance (radians) for clustering refining directions.
        #[arg(long)]
        cluster_tol: Option<f64>,
        /// Check the counterexample closed form for q = 0..=Q.
        #[arg(long, value_name = "Q")]
        verify_lemma: Option<u64>,
        /// Exit 1 unless |gap - G| <= --tol.
        #[arg(
            long,
            value_name = "G",
            requires = "tol",
            allow_negative_numbers = true
        )]
        expect_gap: Option<f64>,
        #[arg(long, requires = "expect_gap")]
        tol: Option<f64>,
    },
    /// Escape statistics of the Revealing Poll over seeded trials.
    Montecarlo {
        config: PathBuf,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (default: all cores). Output does not depend on it.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Write `x,f` CSV rows of an objective on a uniform grid.
    #[command(allow_negative_numbers = true)]
    Sample {
        objective: String,
        x_min: f64,
        x_max: f64,
        n_points: usize,
        out: PathBuf,
    },
}

fn parse_format(s: &str) -> Result<TraceFormat, String> {
    match s {
        "jsonl" => Ok(TraceFormat::Jsonl),
        "json" => Ok(TraceFormat::Json),
        _ => Err(format!(
            "unknown trace format `{s}` (expected jsonl or json)"
        )),
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            out: trace,
            format,
        } => cmd_run(&config, trace.as_deref(), format, out).map(drop),
        Command::Analyze {
            trace,
            cluster_tol,
            verify_lemma,
            expect_gap,
            tol,
        } => {
            let options = AnalyzeOptions {
                cluster_tol,
                verify_lemma,
                expect_gap: expect_gap.zip(tol),
            };
            cmd_analyze(&trace, &options, out).map(drop)
        }
        Command::Montecarlo {
            config,
            trials,
            seed,
            workers,
        } => cmd_montecarlo(&config, trials, seed, workers, out).map(drop),
        Command::Sample {
            objective,
            x_min,
            x_max,
            n_points,
            out: path,
        } => cmd_sample(&objective, x_min, x_max, n_points, &path, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match dispatch(cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
