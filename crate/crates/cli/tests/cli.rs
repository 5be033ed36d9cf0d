use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ddsm_cli::trace_io::{read_trace, read_trace_from, write_trace_to, TraceFormat};
use ddsm_core::{registry_lookup, run, AlgoConfig, Forcing, PollDirections, SearchSchedule};
use proptest::prelude::*;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ddsm"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn ddsm(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn ddsm")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_config(dir: &Path, cfg: &Path, out: &str) -> Output {
    ddsm(&["run", cfg.to_str().unwrap(), "--out", out], dir)
}

#[test]
fn run_counterexample_trace() {
    let dir = TempDir::new().unwrap();
    let o = run_config(dir.path(), &config("counterexample.cfg"), "t.jsonl");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = read_trace(&dir.path().join("t.jsonl")).unwrap();
    assert_eq!(trace.records.len(), 52);
    assert_eq!(trace.records[6].x_k, vec![5.0 / 32.0]);
    assert_eq!(trace.records[6].alpha_k, 1.0 / 32.0);
}

#[test]
fn json_format_override() {
    let dir = TempDir::new().unwrap();
    let cfg = config("counterexample.cfg");
    let o = ddsm(
        &[
            "run",
            cfg.to_str().unwrap(),
            "--out",
            "t.json",
            "--format",
            "json",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("t.json")).unwrap();
    assert!(text.trim_start().starts_with('{'));
    let a = read_trace(&dir.path().join("t.json")).unwrap();
    run_config(dir.path(), &cfg, "t.jsonl");
    let b = read_trace(&dir.path().join("t.jsonl")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn revealing_traces_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = config("revealing.cfg");
    run_config(dir.path(), &cfg, "a.jsonl");
    run_config(dir.path(), &cfg, "b.jsonl");
    let a = fs::read(dir.path().join("a.jsonl")).unwrap();
    let b = fs::read(dir.path().join("b.jsonl")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn bad_beta_exits_2_naming_the_field() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(config("counterexample.cfg"))
        .unwrap()
        .replace("beta1 = 0.5", "beta1 = 0.75");
    let path = dir.path().join("bad.cfg");
    fs::write(&path, text).unwrap();
    let o = run_config(dir.path(), &path, "t.jsonl");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("beta1"), "{}", stderr(&o));
}

#[test]
fn unknown_key_and_missing_file_exit_2() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("typo.cfg");
    let text = fs::read_to_string(config("counterexample.cfg"))
        .unwrap()
        .replace("gamma = 1.0", "gama = 1.0");
    fs::write(&path, text).unwrap();
    let o = run_config(dir.path(), &path, "t.jsonl");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gama"), "{}", stderr(&o));

    let o = run_config(dir.path(), &dir.path().join("nope.cfg"), "t.jsonl");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_objective_exits_2() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("obj.cfg");
    let text = fs::read_to_string(config("counterexample.cfg"))
        .unwrap()
        .replace("name = \"counterexample\"", "name = \"rosenbrock\"");
    fs::write(&path, text).unwrap();
    let o = run_config(dir.path(), &path, "t.jsonl");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rosenbrock"));
}

#[test]
fn analyze_counterexample_gap() {
    let dir = TempDir::new().unwrap();
    run_config(dir.path(), &config("counterexample.cfg"), "t.jsonl");
    let o = ddsm(
        &[
            "analyze",
            "t.jsonl",
            "--expect-gap",
            "1.0",
            "--tol",
            "1e-3",
            "--verify-lemma",
            "12",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("lemma-verified q=0..12"), "{text}");
    assert!(text.contains("refined_point: [0]"), "{text}");
    assert!(text.contains("f_refined: -1"), "{text}");

    let o = ddsm(
        &["analyze", "t.jsonl", "--expect-gap", "0", "--tol", "1e-3"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn analyze_verify_lemma_on_short_trace_exits_2() {
    let dir = TempDir::new().unwrap();
    run_config(dir.path(), &config("counterexample.cfg"), "t.jsonl");
    let o = ddsm(&["analyze", "t.jsonl", "--verify-lemma", "26"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn analyze_revealing_trace_breaks_closed_form() {
    let dir = TempDir::new().unwrap();
    run_config(dir.path(), &config("revealing.cfg"), "t.jsonl");
    let o = ddsm(&["analyze", "t.jsonl", "--verify-lemma", "3"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("lemma-failed"));
}

#[test]
fn analyze_quadratic_gap_zero() {
    let dir = TempDir::new().unwrap();
    run_config(dir.path(), &config("quadratic.cfg"), "t.jsonl");
    let o = ddsm(
        &["analyze", "t.jsonl", "--expect-gap", "0", "--tol", "1e-6"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn corrupt_trace_exits_2() {
    let dir = TempDir::new().unwrap();
    run_config(dir.path(), &config("counterexample.cfg"), "t.jsonl");
    let path = dir.path().join("t.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    let cut: Vec<&str> = text.lines().take(10).collect();
    fs::write(&path, cut.join("\n")).unwrap();
    let o = ddsm(&["analyze", "t.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    fs::write(&path, "not a trace").unwrap();
    let o = ddsm(&["analyze", "t.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn montecarlo_all_escape() {
    let dir = TempDir::new().unwrap();
    let cfg = config("revealing.cfg");
    let o = ddsm(
        &[
            "montecarlo",
            cfg.to_str().unwrap(),
            "--trials",
            "200",
            "--seed",
            "7",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("escaped: 200/200"));
    assert!(stdout(&o).contains("never: 0"));
}

#[test]
fn montecarlo_output_independent_of_workers() {
    let dir = TempDir::new().unwrap();
    let cfg = config("revealing.cfg");
    let go = |w: &str| {
        let o = ddsm(
            &[
                "montecarlo",
                cfg.to_str().unwrap(),
                "--trials",
                "64",
                "--seed",
                "3",
                "--workers",
                w,
            ],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0));
        o.stdout
    };
    assert_eq!(go("1"), go("4"));
}

#[test]
fn montecarlo_needs_revealing_radius() {
    let dir = TempDir::new().unwrap();
    let cfg = config("counterexample.cfg");
    let o = ddsm(&["montecarlo", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("revealing_radius"));
}

#[test]
fn sample_csv() {
    let dir = TempDir::new().unwrap();
    let o = ddsm(
        &["sample", "counterexample", "-2", "2", "4001", "s.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(dir.path().join("s.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["x", "f"]);
    let rows: Vec<(f64, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 4001);
    assert_eq!(rows[2000], (0.0, -1.0));

    ddsm(
        &["sample", "counterexample", "1", "2", "3", "t.csv"],
        dir.path(),
    );
    let text = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(text, "x,f\n1,1\n1.5,1.125\n2,2\n");
}

#[test]
fn sample_bad_input_exits_2() {
    let dir = TempDir::new().unwrap();
    for args in [
        ["sample", "counterexample", "2", "1", "3", "s.csv"],
        ["sample", "counterexample", "0", "1", "1", "s.csv"],
        ["sample", "nope", "0", "1", "3", "s.csv"],
    ] {
        let o = ddsm(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

fn arb_trace_config() -> impl Strategy<Value = (AlgoConfig, &'static str)> {
    (
        -3.0..3.0f64,
        1e-3..2.0f64,
        proptest::option::of(0.1..3.0f64),
        1usize..4,
        prop::bool::ANY,
        any::<u64>(),
        0u64..40,
        prop::sample::select(vec!["counterexample", "neg_abs", "abs", "quadratic_1d"]),
    )
        .prop_map(|(x0, alpha0, radius, count, search, seed, iters, name)| {
            let cfg = AlgoConfig {
                x0: vec![x0],
                alpha0,
                beta1: 0.5,
                beta2: 0.5,
                gamma: 2.0,
                revealing_radius: radius,
                revealing_count: count,
                search_schedule: if search {
                    SearchSchedule::Counterexample
                } else {
                    SearchSchedule::None
                },
                poll_directions: PollDirections::Pm1,
                forcing: Forcing::Zero,
                seed,
                max_iterations: iters,
                alpha_min: 0.0,
            };
            (cfg, name)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn trace_round_trip((cfg, name) in arb_trace_config(), json in prop::bool::ANY) {
        let obj = registry_lookup(name).unwrap();
        let trace = run(&cfg, &obj).unwrap();
        let format = if json { TraceFormat::Json } else { TraceFormat::Jsonl };
        let mut buf = Vec::new();
        write_trace_to(&trace, format, &mut buf).unwrap();
        let back = read_trace_from(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &trace);
        let mut again = Vec::new();
        write_trace_to(&back, format, &mut again).unwrap();
        prop_assert_eq!(buf, again);
    }
}
