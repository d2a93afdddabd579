//! Exit-status contract and report determinism of the binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/scenarios").join(format!("{name}.json"))
}

fn hardy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hardy-blh")).args(args).output().expect("binary runs")
}

fn run(name: &str, extra: &[&str]) -> Output {
    let path = scenario(name);
    let mut args = vec!["run", path.to_str().unwrap(), "--quiet"];
    args.extend_from_slice(extra);
    hardy(&args)
}

fn compare(a: &str, b: &str, mode: &str) -> Output {
    let (a, b) = (scenario(a), scenario(b));
    hardy(&["compare", a.to_str().unwrap(), b.to_str().unwrap(), "--mode", mode, "--quiet", "--no-timing"])
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

#[test]
fn whole_space_passes() {
    let out = run("whole-space", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["passed"], true);
    assert!(r["timing"]["total_ms"].is_number());
    for step in r["steps"].as_array().unwrap() {
        for check in step["checks"].as_array().unwrap() {
            assert!(check["tolerance"].is_number() && check.get("trusted_degree").is_some(), "{check}");
        }
    }
}

#[test]
fn difference_orbit_reports_multiplier_coefficients() {
    let out = run("z-minus-z1", &["--no-timing"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let phi = r["steps"].as_array().unwrap().iter().find(|s| s["step"] == "extract_phi").unwrap();
    let coeffs = phi["outputs"]["phi"][0]["multiplier"]["coeffs"].as_array().unwrap();
    assert_eq!(coeffs[0]["shape"], serde_json::json!([5, 5]));
    assert!(r.get("timing").is_none());
    assert_eq!(r["stability"]["stable"], true);
}

#[test]
fn input_errors_exit_one_and_name_the_step() {
    let out = run("degenerate-cap", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step 2 (extract_phi)"));
    let out = run("out-of-order", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step 1 (extract_theta)"));
    let out = run("whole-space", &["--max-dim", "30"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds the limit 30"));
    let out = hardy(&["run", "/nonexistent/scenario.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn failed_verdict_exits_two() {
    // a rank-2 model checked against an expected rank of 1
    let text = std::fs::read_to_string(scenario("ambient-rank2")).unwrap().replace("\"expect_rank\": 2", "\"expect_rank\": 1");
    let path = std::env::temp_dir().join(format!("hardy-blh-rank-{}.json", std::process::id()));
    std::fs::write(&path, text).unwrap();
    let out = hardy(&["run", path.to_str().unwrap(), "--quiet"]);
    std::fs::remove_file(&path).ok();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["passed"], false);
}

#[test]
fn tolerance_flag_tightens_verdicts() {
    let out = run("z-minus-z1", &["--tolerance", "1e-30", "--no-stability"]);
    assert_eq!(out.status.code(), Some(2));
    let r = json(&out);
    assert!(r["stability"].is_null());
    let wold = r["steps"].as_array().unwrap().iter().find(|s| s["step"] == "wold").unwrap();
    assert!((wold["checks"][0]["tolerance"].as_f64().unwrap() / 1e-30 - 1.0).abs() < 1e-12);
}

#[test]
fn compare_modes_follow_the_exit_contract() {
    let self_pair = compare("z-minus-z1", "z-minus-z1", "coincide");
    assert_eq!(self_pair.status.code(), Some(0));
    let r = json(&self_pair);
    assert_eq!(r["outcome"], "certified");
    assert!(r["certificate"]["unitarity_residual"].as_f64().unwrap() < 1e-8);

    assert_eq!(compare("conjugate-a", "conjugate-b", "coincide").status.code(), Some(0));
    let ranks = compare("ambient-rank1", "ambient-rank2", "coincide");
    assert_eq!(ranks.status.code(), Some(2));
    assert_eq!(json(&ranks)["outcome"], "rejected");

    assert_eq!(compare("nested-inner", "nested-outer", "nested").status.code(), Some(0));
    assert_eq!(compare("nested-outer", "nested-inner", "nested").status.code(), Some(2));
    assert_eq!(compare("z-minus-z1", "z-minus-z1", "tau").status.code(), Some(0));
    // nested mode needs equal working grades
    assert_eq!(compare("z-minus-z1", "nested-outer", "nested").status.code(), Some(1));
}

#[test]
fn reports_are_byte_identical_across_runs_and_modes() {
    let first = run("two-differences", &["--no-timing"]);
    let second = run("two-differences", &["--no-timing"]);
    let sequential = run("two-differences", &["--no-timing", "--sequential"]);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stdout, sequential.stdout);
    let a = compare("conjugate-a", "conjugate-b", "coincide");
    let b = compare("conjugate-a", "conjugate-b", "coincide");
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn output_flag_writes_the_report() {
    let path = std::env::temp_dir().join(format!("hardy-blh-out-{}.json", std::process::id()));
    let out = run("whole-space", &["-o", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(written["label"], "whole-space");
}

#[test]
fn selftest_passes() {
    let out = hardy(&["selftest", "--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}
