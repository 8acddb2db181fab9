use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use asc_cli::config::{Task, CONFIG_KEYS};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_asc"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run_with(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_text(config: &str, extra: &[&str]) -> Output {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    file.write_all(config.as_bytes()).unwrap();
    let path = file.path().to_str().unwrap().to_string();
    let mut args = vec!["run", "--config", &path];
    args.extend_from_slice(extra);
    run_with(&args)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const CYLINDER: &str = r#"{"dimension": 3, "metric": "euclidean", "defining_function": "sqrt(x1^2+x2^2)-1",
    "points": [[1, 0, 0]], "tasks": ["obstruction"]}"#;

#[test]
fn cylinder_report_is_exact_and_deterministic() {
    let path = configs().join("cylinder.json");
    let args = ["run", "--config", path.to_str().unwrap(), "--quiet"];
    let first = run_with(&args);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(first.stdout, run_with(&args).stdout);
    let text = String::from_utf8(first.stdout.clone()).unwrap();
    assert!(text.contains("\"value\": -8.3333333333333329e-2"), "{text}");
    let report = json(&first);
    assert_eq!(report["pass"], Value::Bool(true));
    let p = &report["per_point"][0];
    assert_eq!(p["point"][0].as_f64(), Some(1.0));
    assert_eq!(p["values"]["obstruction"]["weight"].as_f64(), Some(-3.0));
    assert_eq!(p["values"]["obstruction"]["scale"], "g");
    assert!(p["warnings"][0].as_str().unwrap().starts_with("holographic:"));
    assert_eq!(report["meta"]["jet_order"].as_u64(), Some(10));
    assert_eq!(report["meta"]["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn example_configs_pass() {
    for name in ["sphere_identities.json", "curved_d4.json", "linearize.json"] {
        let path = configs().join(name);
        let out = run_with(&["run", "--config", path.to_str().unwrap(), "--quiet"]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn input_errors_exit_2() {
    let out = run_text(&CYLINDER.replace("\"dimension\": 3", "\"dimension\": 2"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("$.dimension"));

    let out = run_text(&CYLINDER.replace("sqrt(x1", "sqr(x1"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("column"));

    assert_eq!(run_with(&["run"]).status.code(), Some(2));
    assert_eq!(run_with(&["run", "--config", "/nonexistent/config.json"]).status.code(), Some(2));
    assert_eq!(run_text("{not json", &[]).status.code(), Some(2));
    assert_eq!(run_text(CYLINDER, &["--tolerance-scale", "-1"]).status.code(), Some(2));
}

#[test]
fn numeric_errors_exit_3() {
    let out = run_text(CYLINDER, &["--jet-order", "5", "--quiet"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["per_point"][0]["errors"]["obstruction"]["kind"], "InsufficientOrder");

    let critical = r#"{"dimension": 3, "metric": "euclidean", "defining_function": "x1^2+x2^2+x3^2+1",
        "points": [[0, 0, 0]], "tasks": ["obstruction"]}"#;
    let out = run_text(critical, &["--quiet"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["per_point"][0]["errors"]["projection"]["kind"], "ProjectionDiverged");
}

#[test]
fn residual_failures_exit_1() {
    let path = configs().join("sphere_identities.json");
    let out = run_with(&["run", "--config", path.to_str().unwrap(), "--tolerance-scale", "1e-30", "--quiet"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], Value::Bool(false));
}

#[test]
fn stdin_output_file_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("summary.csv");
    let mut child = bin()
        .args(["run", "--config", "-", "--format", "csv", "--quiet", "--output", target.to_str().unwrap()])
        .stdin(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(CYLINDER.as_bytes()).unwrap();
    assert_eq!(child.wait().unwrap().code(), Some(0));
    let csv = std::fs::read_to_string(target).unwrap();
    assert_eq!(csv.lines().next(), Some("point_index,case,quantity,value,weight,scale"));
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[..3], ["0", "", "obstruction"]);
    assert!((row[3].parse::<f64>().unwrap() + 1.0 / 12.0).abs() < 1e-13);
    assert_eq!(row[4..], ["-3.0000000000000000e0", "g"]);
}

#[test]
fn seed_is_recorded_and_changes_random_directions() {
    let path = configs().join("sphere_identities.json");
    let a = json(&run_with(&["run", "--config", path.to_str().unwrap(), "--seed", "1", "--quiet"]));
    let b = json(&run_with(&["run", "--config", path.to_str().unwrap(), "--seed", "2", "--quiet"]));
    assert_eq!(a["meta"]["seed"].as_u64(), Some(1));
    let key = "identities.tractor_metricity";
    assert_ne!(a["per_point"][0]["residuals"][key], b["per_point"][0]["residuals"][key]);
}

#[test]
fn catalog_lists_presets() {
    let out = run_with(&["catalog"]);
    assert_eq!(out.status.code(), Some(0));
    let listing = json(&out);
    assert_eq!(listing["surfaces"].as_array().unwrap().len(), 9);
    let cyl = listing["surfaces"].as_array().unwrap().iter().find(|s| s["name"] == "cylinder(d=3, r=1)").unwrap();
    assert_eq!(cyl["known_obstruction"].as_f64(), Some(-1.0 / 12.0));
}

#[test]
fn verify_battery_passes() {
    let out = run_with(&["verify", "--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = json(&out);
    assert!(report["per_point"].as_array().unwrap().iter().any(|p| p["residuals"].get("known_obstruction").is_some()));
}

#[test]
fn schema_file_matches_parser() {
    let schema: Value =
        serde_json::from_str(include_str!("../schema/asc.schema.json")).expect("schema is valid JSON");
    let config = &schema["$defs"]["config"];
    let mut keys: Vec<&str> = config["properties"].as_object().unwrap().keys().map(String::as_str).collect();
    let mut expected = CONFIG_KEYS.to_vec();
    keys.sort_unstable();
    expected.sort_unstable();
    assert_eq!(keys, expected);
    let tasks: Vec<&str> = schema["$defs"]["task"]["enum"].as_array().unwrap().iter().map(|t| t.as_str().unwrap()).collect();
    assert_eq!(tasks, Task::ALL.iter().map(|t| t.name()).collect::<Vec<_>>());
    let required: Vec<&str> = config["required"].as_array().unwrap().iter().map(|t| t.as_str().unwrap()).collect();
    assert_eq!(required, ["dimension", "metric", "defining_function", "points", "tasks"]);
}
