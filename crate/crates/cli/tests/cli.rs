//! End-to-end runs of the installed binary: file formats and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn polarflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polarflow"))
        .args(args)
        .output()
        .expect("the binary runs")
}

fn write_file(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, body).expect("fixture write");
    path.to_str().expect("utf-8 path").to_owned()
}

fn read_json(path: &Path) -> serde_json::Value {
    let text = fs::read_to_string(path).expect("output exists");
    serde_json::from_str(&text).expect("output is JSON")
}

fn entry(value: &serde_json::Value, key: &str, i: usize, j: usize) -> f64 {
    value[key][i][j].as_f64().expect("numeric entry")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

// The workhorse example: A = [[0,-2],[1,0]] factors into P = diag(2,1) and
// the quarter-turn Q = [[0,-1],[1,0]].
const WORKHORSE: &str = "[[0,-2],[1,0]]";

#[test]
fn polar_oracle_factors_the_workhorse() {
    let dir = TempDir::new().unwrap();
    let input = write_file(&dir, "a.json", WORKHORSE);
    let output = dir.path().join("factors.json");

    let out = polarflow(&[
        "polar",
        "--input",
        &input,
        "--method",
        "oracle",
        "--output",
        output.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));

    let doc = read_json(&output);
    assert_eq!(doc["method"], "oracle");
    assert!((entry(&doc, "p", 0, 0) - 2.0).abs() <= 1e-12);
    assert!((entry(&doc, "p", 1, 1) - 1.0).abs() <= 1e-12);
    assert!(entry(&doc, "p", 0, 1).abs() <= 1e-12);
    assert!((entry(&doc, "q", 0, 1) + 1.0).abs() <= 1e-12);
    assert!((entry(&doc, "q", 1, 0) - 1.0).abs() <= 1e-12);
    let verification = &doc["verification"];
    for flag in [
        "reconstructs",
        "p_symmetric",
        "p_positive_definite",
        "q_isotropy",
        "p_on_fiber",
    ] {
        assert_eq!(verification[flag], true, "verification flag {flag}");
    }
}

#[test]
fn polar_defaults_to_the_flow_method() {
    let dir = TempDir::new().unwrap();
    let input = write_file(&dir, "a.json", WORKHORSE);
    let output = dir.path().join("factors.json");

    let out = polarflow(&["polar", "--input", &input, "--output", output.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));

    let doc = read_json(&output);
    assert_eq!(doc["method"], "flow");
    assert!((entry(&doc, "p", 0, 0) - 2.0).abs() <= 1e-5);
    assert!((entry(&doc, "p", 1, 1) - 1.0).abs() <= 1e-5);
    assert_eq!(doc["verification"]["reconstructs"], true);
}

#[test]
fn polar_accepts_a_sigma0_file() {
    let dir = TempDir::new().unwrap();
    let input = write_file(&dir, "a.json", "[[1,2],[-1,1]]");
    let sigma0 = write_file(&dir, "sigma0.json", "[[2,1],[1,1]]");
    let output = dir.path().join("factors.json");

    let out = polarflow(&[
        "polar",
        "--input",
        &input,
        "--sigma0",
        &sigma0,
        "--method",
        "oracle",
        "--output",
        output.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));

    let doc = read_json(&output);
    for flag in ["reconstructs", "p_symmetric", "q_isotropy", "p_on_fiber"] {
        assert_eq!(doc["verification"][flag], true, "verification flag {flag}");
    }
}

#[test]
fn flow_writes_the_pinned_trace_columns() {
    let dir = TempDir::new().unwrap();
    // Rotation by 1 radian: flows to B = I, so sq_dist_to_p decays to ~0.
    let input = write_file(
        &dir,
        "a.json",
        "[[0.5403023058681398,-0.8414709848078965],[0.8414709848078965,0.5403023058681398]]",
    );
    let trace = dir.path().join("trace.csv");

    let out = polarflow(&[
        "flow",
        "--input",
        &input,
        "--steps",
        "50",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));

    let text = fs::read_to_string(&trace).expect("trace exists");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,time,cost_j,omega_norm,fiber_residual,sq_dist_to_p");
    assert_eq!(lines.len(), 1 + 51, "initial state plus every step");

    let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    let last: Vec<f64> = lines[51].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert_eq!(last[0], 50.0);
    assert!((last[1] - 5.0).abs() <= 1e-12, "time column is step*h");
    assert!(last[2] < first[2], "cost decays");
    assert!(last[5] <= 1e-6, "squared distance to P decays");
}

#[test]
fn experiment_emits_the_three_artifacts() {
    let dir = TempDir::new().unwrap();
    let config = write_file(
        &dir,
        "config.json",
        r#"{"n": 2, "count": 4, "seed": 7, "steps": 20, "record_every": 5}"#,
    );
    let out_dir = dir.path().join("results");

    let out = polarflow(&[
        "experiment",
        "--config",
        &config,
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let summary = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(summary.contains("4 trajectories"), "summary line: {summary}");

    let trajectories = fs::read_to_string(out_dir.join("trajectories.csv")).unwrap();
    assert!(trajectories.starts_with("trajectory_id,step,time,sq_dist\n"));
    // 4 trajectories * (steps 0,5,10,15,20) plus the header.
    assert_eq!(trajectories.lines().count(), 1 + 4 * 5);

    let aggregate = fs::read_to_string(out_dir.join("aggregate.csv")).unwrap();
    assert!(aggregate.starts_with("step,time,median,p10,p90\n"));
    assert_eq!(aggregate.lines().count(), 1 + 5);

    let metadata = read_json(&out_dir.join("metadata.json"));
    assert_eq!(metadata["config"]["n"], 2);
    assert_eq!(metadata["config"]["count"], 4);
    assert_eq!(metadata["config"]["sigma0"], "identity");
    assert_eq!(metadata["failed_trajectories"], serde_json::json!([]));
}

#[test]
fn usage_problems_exit_1() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out.json");
    let out = out.to_str().unwrap();

    // Missing required --output.
    let missing = polarflow(&["polar", "--input", "a.json"]);
    assert_eq!(exit_code(&missing), 1);

    // Unknown subcommand.
    let unknown = polarflow(&["transpose"]);
    assert_eq!(exit_code(&unknown), 1);

    // Ragged matrix JSON.
    let ragged = write_file(&dir, "ragged.json", "[[1,2],[3]]");
    let parse = polarflow(&["polar", "--input", &ragged, "--output", out]);
    assert_eq!(exit_code(&parse), 1, "stderr: {}", stderr(&parse));

    // A Σ₀ file that is not symmetric positive definite.
    let a = write_file(&dir, "a.json", WORKHORSE);
    let bad_sigma = write_file(&dir, "sigma0.json", "[[1,2],[2,1]]");
    let spd = polarflow(&["polar", "--input", &a, "--sigma0", &bad_sigma, "--output", out]);
    assert_eq!(exit_code(&spd), 1, "stderr: {}", stderr(&spd));

    // Mismatched dimensions between A and Σ₀.
    let sigma3 = write_file(&dir, "sigma3.json", "[[1,0,0],[0,1,0],[0,0,1]]");
    let dims = polarflow(&["polar", "--input", &a, "--sigma0", &sigma3, "--output", out]);
    assert_eq!(exit_code(&dims), 1, "stderr: {}", stderr(&dims));

    // Config that parses but validates false.
    let config = write_file(&dir, "config.json", r#"{"n": 2, "count": 0, "seed": 1}"#);
    let invalid = polarflow(&["experiment", "--config", &config, "--out-dir", "results"]);
    assert_eq!(exit_code(&invalid), 1, "stderr: {}", stderr(&invalid));

    // A nonpositive step size.
    let h = polarflow(&["polar", "--input", &a, "--h", "-0.1", "--output", out]);
    assert_eq!(exit_code(&h), 1, "stderr: {}", stderr(&h));
}

#[test]
fn numerical_problems_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out.json");
    let out = out.to_str().unwrap();

    // Singular input.
    let singular = write_file(&dir, "singular.json", "[[1,1],[1,1]]");
    let sing = polarflow(&["polar", "--input", &singular, "--output", out]);
    assert_eq!(exit_code(&sing), 2, "stderr: {}", stderr(&sing));
    assert!(stderr(&sing).contains("singular"));

    // Negative determinant is off the identity component.
    let flipped = write_file(&dir, "flip.json", "[[0,1],[1,0]]");
    let neg = polarflow(&["polar", "--input", &flipped, "--output", out]);
    assert_eq!(exit_code(&neg), 2, "stderr: {}", stderr(&neg));

    // A step budget far too small to converge.
    let a = write_file(&dir, "a.json", WORKHORSE);
    let stuck = polarflow(&["polar", "--input", &a, "--max-steps", "2", "--output", out]);
    assert_eq!(exit_code(&stuck), 2, "stderr: {}", stderr(&stuck));
    assert!(stderr(&stuck).contains("did not converge"));
}

#[test]
fn io_problems_exit_3() {
    let dir = TempDir::new().unwrap();

    // Input file that does not exist.
    let gone = dir.path().join("missing.json");
    let unreadable = polarflow(&["polar", "--input", gone.to_str().unwrap(), "--output", "o"]);
    assert_eq!(exit_code(&unreadable), 3, "stderr: {}", stderr(&unreadable));

    // Output path whose directory does not exist.
    let a = write_file(&dir, "a.json", WORKHORSE);
    let nowhere = dir.path().join("no-such-dir").join("out.json");
    let unwritable = polarflow(&["polar", "--input", &a, "--output", nowhere.to_str().unwrap()]);
    assert_eq!(exit_code(&unwritable), 3, "stderr: {}", stderr(&unwritable));

    // An out-dir that collides with an existing file.
    let blocker = write_file(&dir, "blocker", "occupied");
    let config = write_file(&dir, "config.json", r#"{"n": 2, "count": 1, "seed": 1}"#);
    let collision = polarflow(&["experiment", "--config", &config, "--out-dir", &blocker]);
    assert_eq!(exit_code(&collision), 3, "stderr: {}", stderr(&collision));
}

#[test]
fn help_and_version_exit_0() {
    let help = polarflow(&["--help"]);
    assert_eq!(exit_code(&help), 0);
    let text = String::from_utf8_lossy(&help.stdout).into_owned();
    for subcommand in ["polar", "flow", "experiment"] {
        assert!(text.contains(subcommand), "help lists {subcommand}");
    }

    let version = polarflow(&["--version"]);
    assert_eq!(exit_code(&version), 0);
}
