//! End-to-end tests of the binary: exit codes, goldens, determinism.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const PATH2: &str = r#"{
  "vertices": ["0", "1", "2"],
  "edges": [
    {"from": "0", "to": "1", "weight": 1.0},
    {"from": "1", "to": "0", "weight": 1.0},
    {"from": "1", "to": "2", "weight": 1.0},
    {"from": "2", "to": "1", "weight": 1.0}
  ],
  "boundary": ["0", "2"],
  "root": "0"
}"#;

const PATH4: &str = r#"{
  "vertices": ["0", "1", "2", "3", "4"],
  "edges": [
    {"from": "0", "to": "1", "weight": 1.0},
    {"from": "1", "to": "0", "weight": 1.0},
    {"from": "1", "to": "2", "weight": 1.0},
    {"from": "2", "to": "1", "weight": 1.0},
    {"from": "2", "to": "3", "weight": 1.0},
    {"from": "3", "to": "2", "weight": 1.0},
    {"from": "3", "to": "4", "weight": 1.0},
    {"from": "4", "to": "3", "weight": 1.0}
  ],
  "boundary": ["0", "4"],
  "root": "0"
}"#;

const CYCLE8: &str = r#"{
  "vertices": ["0", "1", "2", "3", "4", "5", "6", "7"],
  "edges": [
    {"from": "0", "to": "1", "weight": 1.0},
    {"from": "1", "to": "2", "weight": 1.0},
    {"from": "2", "to": "3", "weight": 1.0},
    {"from": "3", "to": "4", "weight": 1.0},
    {"from": "4", "to": "5", "weight": 1.0},
    {"from": "5", "to": "6", "weight": 1.0},
    {"from": "6", "to": "7", "weight": 1.0},
    {"from": "7", "to": "0", "weight": 1.0}
  ],
  "boundary": ["1", "3", "5", "7"],
  "root": "0"
}"#;

const FUNNEL5: &str = r#"{
  "vertices": ["1", "2", "3", "4", "5"],
  "edges": [
    {"from": "1", "to": "2", "weight": 0.4},
    {"from": "1", "to": "3", "weight": 0.3},
    {"from": "1", "to": "4", "weight": 0.2},
    {"from": "1", "to": "5", "weight": 0.1},
    {"from": "2", "to": "1", "weight": 1.0},
    {"from": "3", "to": "2", "weight": 1.0},
    {"from": "4", "to": "3", "weight": 1.0},
    {"from": "5", "to": "4", "weight": 1.0}
  ],
  "boundary": ["4", "5"],
  "root": "1"
}"#;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace { dir: TempDir::new().expect("temp dir") }
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        fs::write(&path, text).expect("write test file");
        path
    }
}

fn netlap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netlap")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).expect("stdout is JSON")
}

#[test]
fn dirichlet_golden_on_short_path() {
    let ws = Workspace::new();
    let net = ws.file("net.json", PATH2);
    let prob = ws.file(
        "prob.json",
        r#"{"kind": "dirichlet", "f": {"1": 0.0}, "g": {"0": 0.0, "2": 1.0}}"#,
    );
    let out = netlap(&["solve", net.to_str().unwrap(), prob.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let doc = json(&out);
    let mid = doc["solution"]["1"].as_f64().unwrap();
    assert!((mid - 0.5).abs() <= 1e-12, "harmonic midpoint {mid}");
    assert_eq!(doc["degrees_of_freedom"], 0);
}

#[test]
fn solve_output_is_deterministic() {
    let ws = Workspace::new();
    let net = ws.file("net.json", PATH4);
    let prob = ws.file(
        "prob.json",
        r#"{"kind": "dirichlet", "f": {"1": 0.125, "2": -0.25, "3": 0.0625}, "g": {"0": 0.75, "4": -0.5}}"#,
    );
    let first = netlap(&["solve", net.to_str().unwrap(), prob.to_str().unwrap()]);
    let second = netlap(&["solve", net.to_str().unwrap(), prob.to_str().unwrap()]);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout, "byte-identical reruns");
}

#[test]
fn violated_hypothesis_exits_2() {
    let ws = Workspace::new();
    let net = ws.file("net.json", PATH4);
    let prob = ws.file(
        "prob.json",
        r#"{"kind": "bineumann", "f": {"1": 0.2, "2": -0.1, "3": 0.05}, "g": {"0": 0.3, "4": 0.1}}"#,
    );
    let out = netlap(&["solve", net.to_str().unwrap(), prob.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("residual"), "stderr names the residual: {}", stderr(&out));
}

#[test]
fn singular_operator_exits_3() {
    let ws = Workspace::new();
    let net = ws.file("net.json", CYCLE8);
    let prob = ws.file(
        "prob.json",
        r#"{"kind": "bidirichlet", "f": {"0": 0.0, "2": 0.0, "4": 0.0, "6": 0.0}, "g": {"1": 0.1, "3": 0.0, "5": 0.0, "7": 0.0}}"#,
    );
    let out = netlap(&["solve", net.to_str().unwrap(), prob.to_str().unwrap()]);
    assert_eq!(code(&out), 3, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("singular"), "stderr: {}", stderr(&out));
}

#[test]
fn unknown_problem_field_exits_1() {
    let ws = Workspace::new();
    let net = ws.file("net.json", PATH2);
    let prob = ws.file("prob.json", r#"{"kind": "dirichlet", "f": {"1": 0.0}, "gg": {}}"#);
    let out = netlap(&["solve", net.to_str().unwrap(), prob.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("unknown field"), "stderr: {}", stderr(&out));
}

#[test]
fn missing_network_file_exits_1() {
    let ws = Workspace::new();
    let prob = ws.file("prob.json", r#"{"kind": "dirichlet", "f": {}, "g": {}}"#);
    let out = netlap(&["solve", "no-such-network.json", prob.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn variant_scoping_rejects_reversed_dirichlet() {
    let ws = Workspace::new();
    let net = ws.file("net.json", PATH2);
    let prob = ws.file(
        "prob.json",
        r#"{"kind": "dirichlet", "f": {"1": 0.0}, "g": {"0": 0.0, "2": 1.0}, "normal": "reversed"}"#,
    );
    let out = netlap(&["solve", net.to_str().unwrap(), prob.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("normal-derivative"), "stderr: {}", stderr(&out));
}

#[test]
fn residual_gate_exits_4_after_printing() {
    let ws = Workspace::new();
    let net = ws.file("net.json", PATH4);
    let prob = ws.file(
        "prob.json",
        r#"{"kind": "dirichlet", "f": {"1": 0.1, "2": 0.0, "3": 0.0}, "g": {"0": 1.0, "4": 0.0}}"#,
    );
    let out =
        netlap(&["solve", net.to_str().unwrap(), prob.to_str().unwrap(), "--tol", "1e-30"]);
    assert_eq!(code(&out), 4, "stderr: {}", stderr(&out));
    let doc = json(&out);
    assert!(doc["solution"]["0"].is_number(), "document still printed");
    assert!(stderr(&out).contains("gate"), "stderr: {}", stderr(&out));
}

#[test]
fn analyze_path_reports_reversibility() {
    let ws = Workspace::new();
    let net = ws.file("net.json", PATH4);
    let out = netlap(&["analyze", net.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("reversible: yes"), "table: {text}");
    assert!(text.contains("strongly_connected: yes"), "table: {text}");
    assert!(text.contains("REGULAR"), "table: {text}");
}

#[test]
fn analyze_cycle8_reports_singular_blocks() {
    let ws = Workspace::new();
    let net = ws.file("net.json", CYCLE8);
    let out = netlap(&["analyze", net.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("SINGULAR"), "table: {text}");
    assert!(text.contains("reversible: no"), "table: {text}");
}

#[test]
fn analyze_funnel_entrance_boundary_is_interiorward_vertex() {
    let ws = Workspace::new();
    let net = ws.file("net.json", FUNNEL5);
    let out = netlap(&["analyze", net.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("entrance_boundary: 4\n"), "table: {text}");
    assert!(text.contains("exit_boundary: 4, 5"), "table: {text}");
}

#[test]
fn analyze_json_mode_is_structured() {
    let ws = Workspace::new();
    let net = ws.file("net.json", PATH4);
    let out = netlap(&["analyze", net.to_str().unwrap(), "--output", "json"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    assert_eq!(doc["vertices"], 5);
    assert_eq!(doc["reversible"], true);
    assert_eq!(doc["boundary"], serde_json::json!(["0", "4"]));
    assert_eq!(doc["interior_sub_boundary"], serde_json::json!(["1", "3"]));
}

#[test]
fn example_path_emits_transfer_matrix() {
    let out = netlap(&["example", "path-a", "4"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    let t = doc["expectations"]["transfer"][0][0].as_f64().unwrap();
    assert!((t - 1.0 / 6.0).abs() <= 1e-10, "transfer constant {t}");
    assert_eq!(doc["expectations"]["fourth_order_singular"], false);
}

#[test]
fn example_funnel_fold_reproduces_stationary_sevenths() {
    let out = netlap(&["example", "funnel-b", "0.5", "0.25", "0.25", "--allow-loop-fold"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    let pi = &doc["expectations"]["stationary"];
    assert!((pi["1"].as_f64().unwrap() - 4.0 / 7.0).abs() <= 1e-12);
    assert!((pi["2"].as_f64().unwrap() - 2.0 / 7.0).abs() <= 1e-12);
    assert!((pi["3"].as_f64().unwrap() - 1.0 / 7.0).abs() <= 1e-12);
    assert_eq!(doc["parameters"]["retention"], 0.5);
    assert_eq!(doc["parameters"]["chain"], "verbatim");
    // The folded network itself carries no retention arc.
    let edges = doc["network"]["edges"].as_array().unwrap();
    assert!(edges.iter().all(|e| e["from"] != e["to"]));
}

#[test]
fn example_cycle_parity_flags() {
    let out = netlap(&["example", "cycle", "8"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    assert_eq!(doc["expectations"]["fourth_order_singular"], true);
    assert_eq!(doc["expectations"]["transfer"], Value::Null);
    assert_eq!(doc["expectations"]["return_inverse"], Value::Null);

    let out = netlap(&["example", "cycle", "6"]);
    let doc = json(&out);
    assert_eq!(doc["expectations"]["fourth_order_singular"], false);
    assert!(doc["expectations"]["transfer"].is_array());
}

#[test]
fn example_network_feeds_back_into_analyze() {
    let ws = Workspace::new();
    let out = netlap(&["example", "funnel-b", "0.4", "0.3", "0.2", "0.1"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    let net = ws.file("net.json", &doc["network"].to_string());
    let again = netlap(&["analyze", net.to_str().unwrap()]);
    assert_eq!(code(&again), 0, "stderr: {}", stderr(&again));
}

#[test]
fn verify_identities_pass_on_path() {
    let ws = Workspace::new();
    let net = ws.file("net.json", PATH4);
    let out = netlap(&["verify", net.to_str().unwrap(), "--suite", "identities", "--seed", "1"]);
    assert_eq!(code(&out), 0, "output: {}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("identities: 7/7"), "summary: {text}");
    assert!(!text.contains("FAIL"), "no failures: {text}");
}

#[test]
fn verify_montecarlo_passes_and_repeats_under_a_seed() {
    let ws = Workspace::new();
    let net = ws.file("net.json", PATH4);
    let args =
        ["verify", net.to_str().unwrap(), "--suite", "montecarlo", "--seed", "3", "--trials", "4000"];
    let out = netlap(&args);
    assert_eq!(code(&out), 0, "output: {}", stdout(&out));
    assert!(stdout(&out).contains("montecarlo: 5/5"), "summary: {}", stdout(&out));
    let again = netlap(&args);
    assert_eq!(out.stdout, again.stdout, "seeded estimates repeat exactly");
}

#[test]
fn verify_requires_a_seed() {
    let ws = Workspace::new();
    let net = ws.file("net.json", PATH4);
    let out = netlap(&["verify", net.to_str().unwrap(), "--suite", "identities"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn help_exits_zero() {
    let out = netlap(&["--help"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("solve"));
}
