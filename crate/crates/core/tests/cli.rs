use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use critlab::run::{execute, preset, preset_names, OPERATIONS};

fn crit_lab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crit-lab"))
        .args(args)
        .env("CRIT_LAB_OUTPUT_DIR", out)
        .output()
        .expect("binary runs")
}

#[test]
fn list_presets_prints_every_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = crit_lab(&["list-presets"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let listed: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(String::from).collect();
    assert_eq!(listed, preset_names());
}

#[test]
fn preset_run_writes_a_bundle_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("bundle");
    let out = crit_lab(&["preset", "hyperbolic-N4", "--out", target.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(target.join("summary.json").exists());
    assert!(target.join("radial-fit-N4.csv").exists());
    assert!(String::from_utf8(out.stdout).unwrap().contains("PASS"));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = crit_lab(&["preset", "liouville-self"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("summary.txt").exists());
}

#[test]
fn assertion_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fail.json");
    std::fs::write(
        &cfg,
        r#"{"name":"fail","tasks":["liouville"],
            "liouville":{"mode":"planar","lambda":-1.0,"b":0.0},
            "expect":{"hypothesis_violated":false}}"#,
    )
    .unwrap();
    let out = crit_lab(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = dir.path().join("bad.json");
    std::fs::write(&bad_key, "{\"name\":\"x\",\"tasks\":[\"green\"],\n\"operatr\":{}}").unwrap();
    let out = crit_lab(&["run", bad_key.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("operatr") && err.contains("line 2"), "{err}");

    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"name":"x","tasks":[]}"#).unwrap();
    assert_eq!(crit_lab(&["run", empty.to_str().unwrap()], dir.path()).status.code(), Some(2));

    let missing = dir.path().join("missing.json");
    assert_eq!(crit_lab(&["run", missing.to_str().unwrap()], dir.path()).status.code(), Some(2));

    assert_eq!(crit_lab(&["preset", "no-such-preset"], dir.path()).status.code(), Some(2));
}

#[test]
fn operator_files_resolve_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("op.json"),
        r#"{"nodes":4,"edges":[[0,1,1.0],[1,2,2.0],[2,3,1.0]],"boundary":[0,3]}"#,
    )
    .unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"name":"file","operator":{"file":"op.json"},"tasks":["green","spectral"]}"#).unwrap();
    let out = crit_lab(&["run", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn presets_cover_every_operation_and_pass() {
    let mut covered = BTreeSet::new();
    for name in preset_names() {
        let summary = execute(&preset(name).unwrap()).unwrap().summary;
        assert!(summary.passed, "{}", summary.to_text());
        covered.extend(summary.operations);
    }
    let missing: Vec<&&str> = OPERATIONS.iter().filter(|op| !covered.contains(**op)).collect();
    assert!(missing.is_empty(), "unreached operations: {missing:?}");
}

#[test]
fn verify_all_on_the_path_preset_is_deterministic() {
    let c = preset("path1d-subcritical").unwrap();
    let a = execute(&c).unwrap();
    let b = execute(&c).unwrap();
    assert!(a.summary.passed, "{}", a.summary.to_text());
    assert_eq!(a.summary.to_json(), b.summary.to_json());
    assert_eq!(a.artifacts, b.artifacts);
}
