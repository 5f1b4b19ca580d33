use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_junta-adv")).args(args).output().expect("binary runs")
}

fn schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schema.json");
    let text = std::fs::read_to_string(path).expect("schema file");
    let schema: Value = serde_json::from_str(&text).expect("schema parses");
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn json_ok(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let value: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    let validator = schema();
    let errors: Vec<String> = validator.iter_errors(&value).map(|e| format!("{e} at {}", e.instance_path())).collect();
    assert!(errors.is_empty(), "{args:?}: {errors:?}");
    assert_eq!(value["verified"], Value::Bool(true));
    value
}

fn csv_rows(args: &[&str]) -> (String, Vec<Vec<String>>) {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    (header, lines.map(|l| l.split(',').map(str::to_string).collect()).collect())
}

#[test]
fn bound_exact_half_reports_objective_and_d() {
    let v = json_ok(&["bound", "--weights", "exact-half", "--k", "4"]);
    let r = &v["result"];
    assert_eq!(r["d"].as_array().unwrap().len(), 5);
    let obj = r["objective"].as_f64().unwrap();
    assert!((obj - 4.0 / 3f64.sqrt()).abs() < 1e-6, "{obj}");
}

#[test]
fn cert_cgt_small_instance() {
    let v = json_ok(&["cert-cgt", "--n", "6", "--k", "2"]);
    assert!(v["result"]["max_pair_deviation"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn cert_half_zero_is_usage_error() {
    let out = run(&["cert-half", "--k", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
}

#[test]
fn unknown_command_and_bad_flags_are_usage_errors() {
    for args in [
        &["frobnicate"][..],
        &["bound", "--k", "4", "--weights", "nope"],
        &["kraw", "--k", "3", "--p", "1.5"],
        &["cert-cgt", "--n", "3", "--k", "5"],
        &["kraw", "--k", "3", "--tol", "-1"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(String::from_utf8_lossy(&out.stderr).trim_end().lines().count(), 1, "{args:?}");
    }
}

#[test]
fn unwritable_output_is_exit_one() {
    let out = run(&["kraw", "--k", "3", "--out", "/nonexistent-dir/out.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn growth_csv_exact_half() {
    let (header, rows) = csv_rows(&["cert-half", "--k", "12", "--format", "csv"]);
    assert_eq!(header, "k,g,ratio");
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[0], ["1", "2", "2"]);
    for row in &rows {
        let k: f64 = row[0].parse().unwrap();
        let g: f64 = row[1].parse().unwrap();
        let ratio: f64 = row[2].parse().unwrap();
        assert!((g / k.powf(0.25) - ratio).abs() <= 1e-9, "{row:?}");
    }
}

#[test]
fn growth_csv_majority_even_has_even_rows() {
    let (header, rows) = csv_rows(&["cert-maj", "--k", "10", "--format", "csv"]);
    assert_eq!(header, "k,g,ratio");
    let ks: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(ks, ["2", "4", "6", "8", "10"]);
}

#[test]
fn csv_written_to_file() {
    let dir = std::env::temp_dir().join(format!("junta-adv-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("growth.csv");
    let out = run(&["cert-half", "--k", "4", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 5);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn every_command_validates_against_schema() {
    json_ok(&["kraw", "--k", "6"]);
    json_ok(&["kraw", "--k", "5", "--p", "0.3"]);
    json_ok(&["johnson", "--n", "6", "--k", "3"]);
    json_ok(&["bound", "--weights", "or", "--k", "1"]);
    json_ok(&["bound", "--weights", "custom:1,2", "--k", "3", "--p-grid", "33"]);
    json_ok(&["cert-half", "--k", "7"]);
    json_ok(&["cert-maj", "--k", "8"]);
    json_ok(&["cert-maj", "--k", "9", "--d", "2"]);
    json_ok(&["brute", "--n", "6", "--k", "1", "--weights", "or"]);
    json_ok(&["overlap", "--k", "9"]);
}

#[test]
fn odd_majority_combines_difference_and_even_bounds() {
    let v = json_ok(&["cert-maj", "--k", "7"]);
    let r = &v["result"];
    let diff = r["objective"].as_f64().unwrap();
    let even = r["even_certificate"]["objective"].as_f64().unwrap();
    assert_eq!(r["even_certificate"]["k"], 6);
    assert!((r["combined_bound"].as_f64().unwrap() - diff - even).abs() < 1e-12);
}

#[test]
fn output_is_deterministic() {
    let a = run(&["bound", "--weights", "majority", "--k", "3"]);
    let b = run(&["bound", "--weights", "majority", "--k", "3"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn thread_variable_is_validated() {
    let ok = Command::new(env!("CARGO_BIN_EXE_junta-adv"))
        .args(["overlap", "--k", "5"])
        .env("JUNTA_ADV_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = Command::new(env!("CARGO_BIN_EXE_junta-adv"))
        .args(["overlap", "--k", "5"])
        .env("JUNTA_ADV_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
