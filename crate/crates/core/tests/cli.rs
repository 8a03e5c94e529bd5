use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use artic_core::io::{read_json, AxisRecord, EstimateReport, FORMAT_VERSION};
use artic_core::metrics::Method;

fn artic(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_artic"))
        .args(args)
        .current_dir(dir)
        .env("ARTIC_THREADS", "1")
        .output()
        .unwrap()
}

fn gen_suite(dir: &Path) {
    let out = artic(dir, &["gen", "--template", "door", "--count", "2", "--points", "150", "--frames", "4", "--out", "suite"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_writes_manifests_and_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    gen_suite(dir.path());
    for id in ["0000_door", "0001_door"] {
        let obj = dir.path().join("suite").join(id);
        assert!(obj.join("manifest.json").is_file());
        assert!(obj.join("rest.ply").is_file());
        assert!(obj.join("frame_003.ply").is_file());
        let gt: AxisRecord = read_json(&obj.join("gt_axis.json")).unwrap();
        assert_eq!(gt.magnitudes.len(), 4);
    }
    assert!(dir.path().join("suite/suite.json").is_file());
}

#[test]
fn estimate_report_carries_version_conventions_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    gen_suite(dir.path());
    let out = artic(dir.path(), &["estimate", "suite/0000_door", "--out", "report.json", "--overlay", "o.ply"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: EstimateReport = read_json(&dir.path().join("report.json")).unwrap();
    assert_eq!(report.version, FORMAT_VERSION);
    assert!(report.conventions.mae.contains("folded"));
    assert_eq!(report.results.len(), 1);
    let algo = &report.results[0];
    assert_eq!(algo.method, Method::Algo);
    assert_eq!(algo.ranked.len(), 84);
    assert!(algo.metrics.as_ref().unwrap().mae_deg < 0.5);
    assert!(algo.runtime_s.is_none());
    assert!(dir.path().join("o.ply").is_file());
}

#[test]
fn estimate_prints_to_stdout_without_out() {
    let dir = tempfile::tempdir().unwrap();
    gen_suite(dir.path());
    let out = artic(dir.path(), &["estimate", "suite/0001_door", "--kind", "revolute"]);
    assert!(out.status.success());
    let report: EstimateReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.settings.kind, "revolute");
}

#[test]
fn direct_estimate_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    gen_suite(dir.path());
    fs::write(dir.path().join("opt.json"), r#"{"restarts": 1, "max_iters": 10}"#).unwrap();
    let out = artic(
        dir.path(),
        &["estimate", "suite/0000_door", "--method", "direct", "--kind", "revolute", "--config", "opt.json", "--trace", "t.csv", "--out", "r.json"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(trace.starts_with("iteration,loss\n"));
    let report: EstimateReport = read_json(&dir.path().join("r.json")).unwrap();
    let summary = report.results[0].trace.as_ref().unwrap();
    assert_eq!(trace.lines().count(), summary.iterations + 2);
    assert_eq!(report.settings.optimizer.max_iters, 10);
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    gen_suite(dir.path());
    for args in [
        vec!["frobnicate"],
        vec!["gen"],
        vec!["gen", "--template", "spaceship", "--out", "x"],
        vec!["gen", "--points", "10", "--out", "x"],
        vec!["estimate", "suite/0000_door", "--trace", "t.csv"],
        vec!["estimate", "suite/0000_door", "--method", "sideways"],
        vec!["eval", "--suite", "suite", "--methods", "psychic"],
        vec!["ablate", "--noise-grid", "-1", "--out", "a"],
    ] {
        let out = artic(dir.path(), &args);
        assert_eq!(out.status.code(), Some(64), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    gen_suite(dir.path());
    fs::write(dir.path().join("opt.json"), r#"{"restarts": 0}"#).unwrap();
    let out = artic(dir.path(), &["estimate", "suite/0000_door", "--method", "direct", "--config", "opt.json"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn missing_input_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = artic(dir.path(), &["estimate", "nowhere/manifest.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere/manifest.json"));
}

#[test]
fn invalid_thread_count_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_artic"))
        .args(["gen", "--out", "x"])
        .current_dir(dir.path())
        .env("ARTIC_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn eval_writes_sorted_rows() {
    let dir = tempfile::tempdir().unwrap();
    gen_suite(dir.path());
    let out = artic(dir.path(), &["eval", "--suite", "suite", "--methods", "algo", "--csv", "e.csv", "--json", "e.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("e.csv")).unwrap();
    let ids: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids, ["0000_door", "0001_door"]);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("e.json")).unwrap()).unwrap();
    assert_eq!(json["version"], FORMAT_VERSION);
    assert_eq!(json["report"]["summary"][0]["method"], "algo");
}
