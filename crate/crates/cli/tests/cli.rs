use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fanatic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fanatic"))
        .args(args)
        .env("FANATIC_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn even_n_is_a_usage_error() {
    let out = fanatic(&["verify-fan2", "--n", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("odd"));
}

#[test]
fn fan2_reports_failing_class_with_witness() {
    let out = fanatic(&["verify-fan2", "--n", "7", "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    assert_eq!(r["data"]["class"], "(0) in Z/4");
    let failed: Vec<&Value> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false && c["informational"] == false)
        .collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|c| c["witness"].is_string()));
}

#[test]
fn fan2_human_output_tags_checks() {
    let out = fanatic(&["verify-fan2", "--n", "3"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("[PASS] equivariance"));
    assert!(text.contains("[FAIL] class_is_two"));
    assert!(text.contains("witness:"));
}

#[test]
fn fan3_subspace_case_passes() {
    let out = fanatic(&["verify-fan3", "--n", "5", "--alpha", "1,1,3", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        json(&out)["data"]["subspace_stabilizer"],
        "{1, e^2j, e^5, e^7j}"
    );
}

#[test]
fn fan3_rejects_wrong_sum() {
    let out = fanatic(&["verify-fan3", "--n", "7", "--alpha", "1,2,3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bordism_table_lists_groups() {
    let out = fanatic(&["bordism-table", "--max-n", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.contains("Z/4")).count(), 2);
    assert_eq!(text.lines().filter(|l| l.contains("Z/2+Z/2")).count(), 2);
}

#[test]
fn solve_identical_measures_at_half() {
    let mu = fixture("mu1.json");
    let out = fanatic(&[
        "solve", "--mu1", &mu, "--mu2", &mu, "--mu3", &mu, "--alpha", "0.5,0.5", "--json",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let r = json(&out);
    assert_eq!(r["data"]["solution"]["converged"], true);
}

#[test]
fn solve_fixture_triple_and_write_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("fan.json");
    let out = fanatic(&[
        "solve",
        "--mu1",
        &fixture("mu1.json"),
        "--mu2",
        &fixture("mu2.json"),
        "--mu3",
        &fixture("mu3.json"),
        "--alpha",
        "0.4,0.6",
        "--seed",
        "3",
        "--json",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let residuals = r["data"]["solution"]["residuals"].as_array().unwrap();
    assert_eq!(residuals.len(), 3);
    assert!(residuals.iter().all(|x| x.as_f64().unwrap() <= 5e-3));
    let written: Value = serde_json::from_str(&std::fs::read_to_string(out_path).unwrap()).unwrap();
    assert_eq!(written, r["data"]["solution"]);
}

#[test]
fn solve_budget_exhaustion_exits_3() {
    let out = fanatic(&[
        "solve",
        "--mu1",
        &fixture("mu1.json"),
        "--mu2",
        &fixture("mu2.json"),
        "--mu3",
        &fixture("mu3.json"),
        "--alpha",
        "0.4,0.6",
        "--budget",
        "5",
        "--tol",
        "0.002",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn solve_validation_errors() {
    let mu = fixture("mu1.json");
    let out = fanatic(&[
        "solve", "--mu1", &mu, "--mu2", &mu, "--mu3", &mu, "--alpha", "0.5,0.6",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = fanatic(&[
        "solve",
        "--mu1",
        &mu,
        "--mu2",
        &mu,
        "--mu3",
        "/nonexistent.json",
        "--alpha",
        "0.5,0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = fanatic(&[
        "solve", "--mu1", &mu, "--mu2", &mu, "--mu3", &mu, "--alpha", "0.5,0.5", "--tol", "1e-6",
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "tolerance below the point granularity"
    );
}

#[test]
fn explore_is_marked_exploratory() {
    let out = fanatic(&[
        "explore-3fan",
        "--mu1",
        &fixture("mu1.json"),
        "--mu2",
        &fixture("mu2.json"),
        "--alpha",
        "1,1,1",
        "--budget",
        "2000",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["data"]["exploratory"], true);
    assert_eq!(r["data"]["solution"]["exploratory"], true);
    let human = fanatic(&[
        "explore-3fan",
        "--mu1",
        &fixture("mu1.json"),
        "--mu2",
        &fixture("mu2.json"),
        "--alpha",
        "1,2,1",
        "--budget",
        "500",
    ]);
    assert!(String::from_utf8_lossy(&human.stdout).contains("[info] exploratory"));
}

#[test]
fn json_output_is_deterministic() {
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timings_ms");
        v
    };
    let a = strip(json(&fanatic(&[
        "verify-fan3",
        "--n",
        "7",
        "--alpha",
        "1,2,4",
        "--json",
    ])));
    let b = strip(json(&fanatic(&[
        "verify-fan3",
        "--n",
        "7",
        "--alpha",
        "1,2,4",
        "--json",
    ])));
    assert_eq!(a, b);
    let args = [
        "solve",
        "--mu1",
        &fixture("mu1.json"),
        "--mu2",
        &fixture("mu2.json"),
        "--mu3",
        &fixture("mu3.json"),
        "--alpha",
        "0.3,0.7",
        "--seed",
        "9",
        "--json",
    ];
    let c = strip(json(&fanatic(&args)));
    let d = strip(json(&fanatic(&args)));
    assert_eq!(c, d);
}

#[test]
fn sample_measure_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.json");
    let out = fanatic(&[
        "sample-measure",
        "--seed",
        "1",
        "--points",
        "50",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let cloud =
        fanatic_core::MeasureCloud::from_json(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(cloud.len(), 50);
    assert_eq!(
        fanatic(&["sample-measure", "--points", "0"]).status.code(),
        Some(2)
    );
}
