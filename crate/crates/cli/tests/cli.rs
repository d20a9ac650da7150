//! End-to-end runs of the `pathbarrier` binary against the shipped data files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathbarrier")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", stdout(out)))
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn check_pc_exit_codes_and_word() {
    let ga = data("graph_a.json");
    let out = run(&["check-pc", p(&ga)]);
    assert_eq!(code(&out), 0);
    let gb = data("graph_b.json");
    let out = run(&["--format", "json", "check-pc", p(&gb)]);
    assert_eq!(code(&out), 1);
    let j = json(&out);
    assert_eq!(j["status"], "rejected");
    assert_eq!(j["word"], "(121)");
    assert_eq!(j["schema_version"], 1);
}

#[test]
fn compare_prints_the_simulation_map() {
    let out = run(&["--format", "json", "compare", p(&data("graph_platoon.json")), p(&data("graph_platoon_lift.json"))]);
    assert_eq!(code(&out), 0);
    let j = json(&out);
    assert_eq!(j["verdict"], "less_or_equal");
    assert_eq!(j["map"]["v3"], "v1");
}

#[test]
fn counterexample_writes_a_replayable_witness() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--out", p(dir.path()), "counterexample", p(&data("graph_b.json"))]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    for f in ["system.json", "spec.json", "certificate.json", "witness.json", "report.txt", "report.json"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let w = read(&dir.path().join("witness.json"));
    assert_eq!(w["word"], "(121)");
    assert_eq!(w["final_norm2"], "1");
    assert_eq!(w["states"][0][0], "0.125");
    // Replaying the witness word through `simulate` lands on e4.
    let sys = dir.path().join("system.json");
    let out = run(&["--format", "json", "simulate", p(&sys), "--x0", "1/8,0,0,0", "--word", "121"]);
    let j = json(&out);
    let last = j["states"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(last, serde_json::json!(["0", "0", "0", "1"]));
}

#[test]
fn counterexample_needs_an_output_directory() {
    let out = run(&["counterexample", p(&data("graph_b.json"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn counterexample_refuses_complete_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--out", p(dir.path()), "counterexample", p(&data("graph_a.json"))]);
    assert_eq!(code(&out), 1);
}

#[test]
fn separate_reports_every_non_edge() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--out", p(dir.path()), "--format", "json", "separate", p(&data("graph_b.json"))]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(dir.path().join("certificate.json").exists());
    let report = read(&dir.path().join("report.json"));
    assert_eq!(report["schema_version"], 1);
}

#[test]
fn quadratic_synthesis_round_trips_through_validate() {
    let dir = tempfile::tempdir().unwrap();
    let (sys, g, spec) = (data("half_identity.json"), data("graph_platoon.json"), data("balls_4_9.json"));
    let out = run(&["--out", p(dir.path()), "synth", p(&sys), p(&g), p(&spec)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let cert = dir.path().join("certificate.json");
    let out = run(&["validate", p(&cert), p(&sys), p(&g), p(&spec)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("validation: pass"));
    // The same certificate does not survive the expanding system.
    let out = run(&["validate", p(&cert), p(&data("double_identity.json")), p(&g), p(&spec)]);
    assert_eq!(code(&out), 1);
}

#[test]
fn expanding_system_is_infeasible_and_unsafe() {
    let (sys, spec) = (data("double_identity.json"), data("balls_4_9.json"));
    let out = run(&["synth", p(&sys), p(&data("graph_platoon.json")), p(&spec)]);
    assert_eq!(code(&out), 1);
    let out = run(&["--format", "json", "brute-force", p(&sys), p(&spec), "--horizon", "1"]);
    assert_eq!(code(&out), 1);
    let j = json(&out);
    assert_eq!(j["status"], "unsafe");
    assert_eq!(j["witness"]["exact"], true);
    assert_eq!(j["witness"]["word"], "(1)");
}

#[test]
fn platoon_sos_synthesis_validates() {
    let dir = tempfile::tempdir().unwrap();
    let (sys, g, spec) = (data("platoon.json"), data("graph_platoon.json"), data("platoon_spec.json"));
    let out = run(&["--out", p(dir.path()), "synth", "--template", "sos", p(&sys), p(&g), p(&spec)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let cert = read(&dir.path().join("certificate.json"));
    assert_eq!(cert["nodes"].as_array().unwrap().len(), 2);
    let out = run(&["validate", p(&dir.path().join("certificate.json")), p(&sys), p(&g), p(&spec)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn simulate_evaluates_the_modified_platoon() {
    // f2(1, 2) = (0.9 − 0.02, 1.6 − 0.16).
    let out = run(&["--format", "json", "simulate", p(&data("platoon_modified.json")), "--x0", "1,2", "--word", "2"]);
    assert_eq!(code(&out), 0);
    let j = json(&out);
    let x: Vec<f64> = j["states"][1].as_array().unwrap().iter().map(|v| v.as_str().unwrap().parse().unwrap()).collect();
    assert!((x[0] - 0.88).abs() < 1e-12 && (x[1] - 1.44).abs() < 1e-12, "{x:?}");
}

#[test]
fn simulate_flags_entry_into_the_unsafe_set() {
    let out = run(&[
        "simulate",
        p(&data("platoon_modified.json")),
        "--x0",
        "0,1",
        "--word",
        "2",
        "--repeat",
        "50",
        "--spec",
        p(&data("platoon_spec.json")),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("unsafe at step"));
}

#[test]
fn experiment_is_reproducible_and_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--seed", "3", "--format", "json", "experiment", "--count", "6", "--dim", "2"];
    let a = json(&run(&args));
    let mut with_out = vec!["--out", p(dir.path())];
    with_out.extend_from_slice(&args);
    let b = json(&run(&with_out));
    for k in ["neither", "both", "only_gbar", "only_g"] {
        assert_eq!(a[k], b[k], "{k}");
    }
    assert_eq!(a["only_g"], 0);
    let total: u64 = ["neither", "both", "only_gbar", "only_g"].iter().map(|k| a[k].as_u64().unwrap()).sum();
    assert_eq!(total, 6);
    for f in ["tally.txt", "tally.json", "tally.csv", "instances.csv"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let rows = std::fs::read_to_string(dir.path().join("instances.csv")).unwrap();
    assert_eq!(rows.lines().count(), 7);
}

#[test]
fn usage_and_io_errors_exit_with_two() {
    assert_eq!(code(&run(&["no-such-command"])), 2);
    let out = run(&["check-pc", "/definitely/not/here.json"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("/definitely/not/here.json"));
}

#[test]
fn unknown_schema_version_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = read(&data("graph_a.json"));
    g["schema_version"] = 2.into();
    let path = dir.path().join("g.json");
    std::fs::write(&path, g.to_string()).unwrap();
    assert_eq!(code(&run(&["check-pc", p(&path)])), 2);
}
