//! End-to-end checks of the `crowdsim` binary: argument handling, exit
//! codes, output placement, and byte-level determinism of what it writes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crowdsim"))
}

fn run_cli(args: &[&str]) -> Output {
    binary().args(args).output().expect("binary spawns")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is UTF-8")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

const GOOD_SCENARIO: &str = r#"{
    "form": "collaborative",
    "ticks": 40,
    "update_period": 5,
    "completion_threshold": 0.9,
    "noise_epsilon": 0.1,
    "agents": {"count": 5, "motivation": {"uniform": [0.3, 0.9]}, "success_rate": {"constant": 0.4}},
    "tasks": {"count": 6, "difficulty": {"uniform": [0.0, 0.5]}, "cost": {"constant": 1.0}}
}"#;

fn write_scenario(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn validate_accepts_good_scenario() {
    let dir = TempDir::new().unwrap();
    let path = write_scenario(&dir, "good.json", GOOD_SCENARIO);
    let out = run_cli(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert_eq!(stdout(&out), "ok\n");
}

#[test]
fn validate_accepts_scenario_flag_form() {
    let dir = TempDir::new().unwrap();
    let path = write_scenario(&dir, "good.json", GOOD_SCENARIO);
    let out = run_cli(&["validate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert_eq!(stdout(&out), "ok\n");
}

#[test]
fn validate_names_the_bad_field() {
    let dir = TempDir::new().unwrap();
    let bad = GOOD_SCENARIO.replace("\"completion_threshold\": 0.9", "\"completion_threshold\": 0.0");
    let path = write_scenario(&dir, "bad.json", &bad);
    let out = run_cli(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).is_empty());
    assert!(
        stderr(&out).contains("completion_threshold must be in (0,1]"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn validate_lists_every_error() {
    let dir = TempDir::new().unwrap();
    let bad = GOOD_SCENARIO
        .replace("\"completion_threshold\": 0.9", "\"completion_threshold\": 0.0")
        .replace("\"noise_epsilon\": 0.1", "\"noise_epsilon\": 1.5");
    let path = write_scenario(&dir, "bad.json", &bad);
    let out = run_cli(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let text = stderr(&out);
    assert!(text.contains("completion_threshold"), "stderr: {text}");
    assert!(text.contains("noise_epsilon"), "stderr: {text}");
}

#[test]
fn validate_reports_syntax_errors_with_position() {
    let dir = TempDir::new().unwrap();
    let path = write_scenario(&dir, "broken.json", "{\n  \"form\": \n}");
    let out = run_cli(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("syntax error"), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("line"), "stderr: {}", stderr(&out));
}

#[test]
fn missing_file_is_an_io_error() {
    let out = run_cli(&["validate", "/nonexistent/scenario.json"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("reading"), "stderr: {}", stderr(&out));
}

#[test]
fn scenario_path_is_required_exactly_once() {
    let out = run_cli(&["validate"]);
    assert_eq!(code(&out), 1, "stderr: {}", stderr(&out));

    let dir = TempDir::new().unwrap();
    let path = write_scenario(&dir, "good.json", GOOD_SCENARIO);
    let p = path.to_str().unwrap();
    let out = run_cli(&["validate", p, "--scenario", p]);
    assert_eq!(code(&out), 1, "stderr: {}", stderr(&out));
}

#[test]
fn unknown_flags_and_commands_are_usage_errors() {
    assert_eq!(code(&run_cli(&["frobnicate"])), 1);
    assert_eq!(code(&run_cli(&["run", "x.json", "--bogus"])), 1);
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&run_cli(&["--help"])), 0);
    assert_eq!(code(&run_cli(&["--version"])), 0);
    assert_eq!(code(&run_cli(&["run", "--help"])), 0);
}

#[test]
fn run_writes_json_report_to_stdout_by_default() {
    let dir = TempDir::new().unwrap();
    let path = write_scenario(&dir, "good.json", GOOD_SCENARIO);
    let out = run_cli(&["run", path.to_str().unwrap(), "--seed", "42"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["seed"], 42);
    assert!(report["number_of_submissions"].as_u64().is_some());
}

#[test]
fn run_same_seed_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let path = write_scenario(&dir, "good.json", GOOD_SCENARIO);
    let args = ["run", path.to_str().unwrap(), "--seed", "42"];
    let first = run_cli(&args);
    let second = run_cli(&args);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);

    let other = run_cli(&["run", path.to_str().unwrap(), "--seed", "43"]);
    assert_ne!(first.stdout, other.stdout, "seed is ignored");
}

#[test]
fn run_csv_format_is_header_plus_row() {
    let dir = TempDir::new().unwrap();
    let path = write_scenario(&dir, "good.json", GOOD_SCENARIO);
    let out = run_cli(&["run", path.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("seed,ticks_elapsed,"));
    assert!(lines[1].starts_with("0,"));
}

#[test]
fn run_rejects_unknown_format() {
    let dir = TempDir::new().unwrap();
    let path = write_scenario(&dir, "good.json", GOOD_SCENARIO);
    let out = run_cli(&["run", path.to_str().unwrap(), "--format", "xml"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn run_out_and_trace_write_files() {
    let dir = TempDir::new().unwrap();
    let path = write_scenario(&dir, "good.json", GOOD_SCENARIO);
    let report_path = dir.path().join("report.json");
    let trace_path = dir.path().join("trace.csv");
    let out = run_cli(&[
        "run",
        path.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        report_path.to_str().unwrap(),
        "--trace",
        trace_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).is_empty(), "report went to the file instead");

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["seed"], 7);

    let trace = fs::read_to_string(&trace_path).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next(),
        Some("tick,kind,agent_id,task_signifier,completion_level")
    );
    assert!(lines.next().is_some(), "trace has at least one event");
}

#[test]
fn failed_write_leaves_no_partial_file() {
    let dir = TempDir::new().unwrap();
    let path = write_scenario(&dir, "good.json", GOOD_SCENARIO);
    let target = dir.path().join("no_such_dir").join("report.json");
    let out = run_cli(&[
        "run",
        path.to_str().unwrap(),
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(!target.exists());
    assert!(!Path::new(target.parent().unwrap()).exists());
}

#[test]
fn sweep_produces_one_csv_row_per_seed_in_order() {
    let dir = TempDir::new().unwrap();
    let path = write_scenario(&dir, "good.json", GOOD_SCENARIO);
    let out = run_cli(&["sweep", path.to_str().unwrap(), "--seeds", "1..10"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11, "header plus ten rows");
    let seeds: Vec<u64> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(seeds, (1..=10).collect::<Vec<u64>>());
}

#[test]
fn sweep_json_format_is_an_array() {
    let dir = TempDir::new().unwrap();
    let path = write_scenario(&dir, "good.json", GOOD_SCENARIO);
    let out = run_cli(&[
        "sweep",
        path.to_str().unwrap(),
        "--seeds",
        "3..5",
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0);
    let reports: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 3);
    assert_eq!(reports[0]["seed"], 3);
    assert_eq!(reports[2]["seed"], 5);
}

#[test]
fn sweep_rejects_empty_range_and_zero_parallelism() {
    let dir = TempDir::new().unwrap();
    let path = write_scenario(&dir, "good.json", GOOD_SCENARIO);
    let p = path.to_str().unwrap();
    let out = run_cli(&["sweep", p, "--seeds", "9..2"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("empty seed range"), "stderr: {}", stderr(&out));

    let out = run_cli(&["sweep", p, "--seeds", "1..4", "--parallel", "0"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("--parallel"), "stderr: {}", stderr(&out));
}

#[test]
fn sweep_parallel_matches_serial_bytes() {
    let dir = TempDir::new().unwrap();
    let path = write_scenario(&dir, "good.json", GOOD_SCENARIO);
    let p = path.to_str().unwrap();
    let serial = run_cli(&["sweep", p, "--seeds", "1..16"]);
    let parallel = run_cli(&["sweep", p, "--seeds", "1..16", "--parallel", "4"]);
    assert_eq!(code(&serial), 0);
    assert_eq!(code(&parallel), 0);
    assert_eq!(serial.stdout, parallel.stdout);
}
