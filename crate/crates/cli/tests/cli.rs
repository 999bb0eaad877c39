use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn kpzlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpzlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("KPZLAB_OUT")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn bare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpzlab")).args(args).env("RUST_LOG", "warn").output().expect("binary runs")
}

#[test]
fn no_arguments_prints_usage() {
    let out = bare(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bad_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["endpoint-scaling", "--bogus", "1"][..],
        &["endpoint-scaling", "--N", "ten"],
        &["no-such-experiment"],
        &["independence", "--K", "3", "--rho", "0.3,0.7"],
        &["endpoint-scaling", "--delta", "-0.1"],
        &["queueing-fuzz", "--temperature", "lukewarm"],
        &["coalescence", "--N", "200,100"],
    ] {
        let out = kpzlab(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none(), "usage errors write nothing");
}

#[test]
fn help_exits_zero() {
    assert_eq!(bare(&["--help"]).status.code(), Some(0));
    assert_eq!(bare(&["marginals", "--help"]).status.code(), Some(0));
}

#[test]
fn endpoint_scaling_is_byte_identical_across_runs() {
    let args = ["endpoint-scaling", "--N", "200", "--delta", "0.05,0.1,0.2,0.4", "--replicas", "1000", "--seed", "7"];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(kpzlab(&args, a.path()).status.code(), Some(0));
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "2"]);
    assert_eq!(kpzlab(&threaded, b.path()).status.code(), Some(0));
    let read = |d: &Path| fs::read(d.join("endpoint-scaling.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn independence_writes_a_passing_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "independence", "--K", "2", "--rho", "0.3,0.7", "--path", "staircase:10", "--replicas", "10000", "--seed", "7",
        "--format", "json",
    ];
    let out = kpzlab(&args, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&fs::read(dir.path().join("independence.json")).unwrap()).unwrap();
    for key in ["experiment", "params", "columns", "cells", "tests", "notes", "pass"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["pass"], Value::Bool(true));
    assert_eq!(report["params"]["rhos"], serde_json::json!([0.3, 0.7]));
    assert!(report["tests"].as_array().unwrap().iter().all(|t| t["pass"] == Value::Bool(true)));
    let manifest: Value = serde_json::from_slice(&fs::read(dir.path().join("independence.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"], report["params"]);
    assert_eq!(manifest["report"], "independence.json");
    assert_eq!(manifest["pass"], Value::Bool(true));
}

#[test]
fn failing_properties_exit_one() {
    // At N = 16 both deltas give half-width 0, so the doubling ratio is 1.
    let dir = tempfile::tempdir().unwrap();
    let out = kpzlab(&["endpoint-scaling", "--N", "16", "--delta", "0.05,0.1", "--replicas", "100"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("failing tests") && stderr.contains("doubling ratio"), "{stderr}");
    let manifest: Value = serde_json::from_slice(&fs::read(dir.path().join("endpoint-scaling.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["pass"], Value::Bool(false));
    assert!(dir.path().join("endpoint-scaling.csv").exists());
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

/// Small configurations whose CSV output is kept under version control.
/// Set `KPZLAB_BLESS=1` to rewrite the golden files.
#[test]
fn csv_output_matches_goldens() {
    let cases: &[(&str, &[&str])] = &[
        ("independence", &["independence", "--path", "staircase:4", "--replicas", "1000"]),
        ("endpoint-scaling", &["endpoint-scaling", "--N", "50", "--replicas", "200"]),
        ("queueing-fuzz", &["queueing-fuzz", "--width", "30", "--levels", "3", "--seeds", "10", "--near-ties", "4"]),
        (
            "appendix-bounds",
            &["appendix-bounds", "--n", "500", "--trials", "2000", "--N", "200", "--lower-trials", "2000"],
        ),
        ("marginals", &["marginals", "--replicas", "500"]),
        ("coalescence", &["coalescence", "--N", "50,100", "--replicas", "50"]),
    ];
    let bless = std::env::var_os("KPZLAB_BLESS").is_some();
    for (name, args) in cases {
        let dir = tempfile::tempdir().unwrap();
        let out = kpzlab(args, dir.path());
        assert!(matches!(out.status.code(), Some(0 | 1)), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let got = fs::read_to_string(dir.path().join(format!("{name}.csv"))).unwrap();
        let golden = golden_dir().join(format!("{name}.csv"));
        if bless {
            fs::write(&golden, &got).unwrap();
            continue;
        }
        let want = fs::read_to_string(&golden).unwrap_or_else(|e| panic!("{}: {e}", golden.display()));
        assert_eq!(got.lines().next(), want.lines().next(), "{name}: header changed");
        assert_eq!(got, want, "{name}: output differs from golden");
    }
}
