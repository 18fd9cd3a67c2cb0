use std::process::{Command, Output};

use serde_json::Value;

fn verify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_verify"))
        .args(args)
        .env_remove("CUBIC_DISC_BACKEND")
        .output()
        .expect("verify runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn without_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn passing_suite_exits_zero() {
    let out = verify(&["bianchi"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["suite"], "bianchi");
    assert_eq!(r["backend"], "exact");
    assert_eq!(r["passed"], true);
    assert!(r["tol"].is_null());
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let out = verify(&["bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown suite"));
}

#[test]
fn tolerance_is_rejected_for_exact_backend() {
    assert_eq!(verify(&["bianchi", "--backend", "exact", "--tol", "1e-9"]).status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(verify(&["bianchi", "--frobnicate"]).status.code(), Some(2));
}

#[test]
fn impossible_tolerance_fails_with_exit_one() {
    let out = verify(&["models", "--backend", "float", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["passed"], false);
}

#[test]
fn float_backend_reports_tolerance() {
    let out = verify(&["irrep", "--backend", "float"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["tol"], 1e-9);
    assert!(r["max_relative_residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn backend_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_verify"))
        .args(["bianchi"])
        .env("CUBIC_DISC_BACKEND", "float")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["backend"], "float");
    let bad = Command::new(env!("CARGO_BIN_EXE_verify"))
        .args(["bianchi"])
        .env("CUBIC_DISC_BACKEND", "quantum")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn reports_are_deterministic_apart_from_timing() {
    for args in [&["irrep", "--seed", "11"][..], &["models", "--backend", "float"][..]] {
        let a = without_timing(report(&verify(args)));
        let b = without_timing(report(&verify(args)));
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}

#[test]
fn checks_are_ordered_by_name() {
    let r = report(&verify(&["models"]));
    let names: Vec<&str> = r["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
}

#[test]
fn markdown_format() {
    let out = verify(&["bianchi", "--format", "md"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# verify bianchi (exact): PASS"));
    assert!(text.contains("| bianchi.nullity | pass |"));
}

#[test]
fn out_file_and_unwritable_path() {
    let dir = std::env::temp_dir().join(format!("cubic-disc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = verify(&["bianchi", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    let bad = dir.join("missing").join("report.json");
    assert_eq!(verify(&["bianchi", "--out", bad.to_str().unwrap()]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}
