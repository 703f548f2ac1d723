//! End-to-end runs of the `finsler` binary.

use std::io::Write;
use std::process::Command;

fn finsler() -> Command {
    Command::new(env!("CARGO_BIN_EXE_finsler"))
}

fn write_spec(content: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(content.as_bytes()).unwrap();
    f
}

#[test]
fn list_examples_prints_catalog() {
    let out = finsler().arg("list-examples").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["heisenberg3", "abelian3", "so3", "aff1"] {
        assert!(text.contains(name), "missing {name} in: {text}");
    }
}

#[test]
fn example_output_is_a_valid_spec() {
    let out = finsler().args(["example", "heisenberg3"]).output().unwrap();
    assert!(out.status.success());
    let spec = write_spec(std::str::from_utf8(&out.stdout).unwrap());
    let run = finsler()
        .args(["analyze", spec.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stdout));
    let text = String::from_utf8(run.stdout).unwrap();
    assert!(text.contains("overall: PASS"));
}

#[test]
fn unknown_example_exits_2() {
    let out = finsler().args(["example", "nosuch"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_json_exits_2() {
    let spec = write_spec("{not json");
    let out = finsler()
        .args(["analyze", spec.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_file_exits_2() {
    let out = finsler()
        .args(["analyze", "/nonexistent/spec.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_verdict_exits_1() {
    let spec = write_spec(
        r#"{
            "spec_version": 1,
            "algebra": "heisenberg3",
            "x": [0.0, 0.0, 1.5],
            "phi": {"kind": "randers"},
            "tasks": ["all"],
            "seed": 1
        }"#,
    );
    let out = finsler()
        .args(["analyze", spec.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("overall: FAIL"));
}

#[test]
fn machine_format_is_json_and_seed_flag_overrides() {
    let spec = write_spec(
        r#"{
            "spec_version": 1,
            "algebra": "abelian3",
            "x": [0.0, 0.0, 0.5],
            "phi": {"kind": "randers"},
            "tasks": ["validate", "symmetry"],
            "seed": 3
        }"#,
    );
    let out = finsler()
        .args([
            "analyze",
            spec.path().to_str().unwrap(),
            "--format",
            "machine",
            "--seed",
            "99",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["input"]["seed"], serde_json::json!(99));
    assert_eq!(v["overall"], serde_json::json!("pass"));
}
