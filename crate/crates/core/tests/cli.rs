use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qc-horizon"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("QC_HORIZON_SEED")
        .output()
        .unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.v1.json")).unwrap()).unwrap()
}

#[test]
fn forecast_happy_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "forecast",
            "--tech",
            "superconducting",
            "--from",
            "2007",
            "--to",
            "2020",
            "--seed",
            "7",
            "--resamples",
            "300",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "report.v1.json",
        "glq-trajectories.svg",
        "metric-trajectories.svg",
        "noise-band.svg",
        "trajectories.csv",
    ] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    let doc = report(dir.path());
    assert_eq!(doc["schema"], "qc-horizon.report.v1");
    assert_eq!(doc["config"]["seed"], 7);
    assert_eq!(doc["forecast"]["thresholds"].as_array().unwrap().len(), 2);
    assert_eq!(doc["forecast"]["diagnostics"]["n_records"], 39);
}

#[test]
fn frontier_with_too_few_records_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("two.csv");
    fs::write(
        &csv,
        "id,date,physical_qubits,gate_error_rate,technology\na,2015-01-01,5,0.01,superconducting\nb,2017-06,9,0.005,superconducting\n",
    )
    .unwrap();
    let out = run(
        &[
            "frontier",
            "--dataset",
            csv.to_str().unwrap(),
            "--min-n",
            "3",
        ],
        &dir.path().join("o"),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient data"));
}

#[test]
fn contour_plot_has_dashed_milestones() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["plot", "--figure", "glq-contour"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let svg = fs::read_to_string(dir.path().join("glq-contour.svg")).unwrap();
    let dashed = svg
        .lines()
        .filter(|l| l.starts_with("<polyline") && l.contains("stroke-dasharray"))
        .count();
    assert_eq!(dashed, 2);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["launch"][..],
        &["forecast", "--no-such-flag"],
        &["forecast", "--aggregation", "mean"],
        &["plot", "--figure", "pie"],
        &["metrics", "--tech", "vacuum-tube"],
        &["forecast", "--quantiles", "0.9,0.1"],
    ] {
        let out = run(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn ingest_writes_rejects_and_strict_mode_aborts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("in.csv");
    fs::write(
        &csv,
        "id,date,physical_qubits,gate_error_rate,technology\na,2015-01-01,5,0.01,superconducting\nb,2016,9,1.5,superconducting\nc,2017-02-30,3,,spin\n",
    )
    .unwrap();
    let out_dir = dir.path().join("lenient");
    let out = run(&["ingest", "--dataset", csv.to_str().unwrap()], &out_dir);
    assert_eq!(out.status.code(), Some(0));
    let rejects = fs::read_to_string(out_dir.join("rejects.csv")).unwrap();
    assert_eq!(rejects.lines().count(), 3, "{rejects}");
    assert!(rejects.contains("\n3,"));
    let normalized = fs::read_to_string(out_dir.join("normalized.csv")).unwrap();
    assert_eq!(normalized.lines().count(), 2);
    assert_eq!(report(&out_dir)["dataset"]["rejected_rows"], 2);

    let out = run(
        &["ingest", "--strict", "--dataset", csv.to_str().unwrap()],
        &dir.path().join("strict"),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 3"));
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qc-horizon"))
        .args(["frontier", "--resamples", "200", "--out"])
        .arg(dir.path())
        .env("QC_HORIZON_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc = report(dir.path());
    assert_eq!(doc["config"]["seed"], 99);
    assert_eq!(doc["frontier"]["covariance"]["seed"], 99);
}

#[test]
fn metrics_table_covers_filtered_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["metrics", "--tech", "trapped-ion"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let table = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let doc = report(dir.path());
    let filtered = doc["dataset"]["filtered"]["total"].as_u64().unwrap() as usize;
    assert_eq!(table.lines().count(), filtered + 1);
    assert!(table.lines().skip(1).all(|l| l.contains(",trapped-ion,")));
}

#[test]
fn help_exits_zero() {
    let out = Command::new(env!("CARGO_BIN_EXE_qc-horizon"))
        .arg("--help")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("forecast"));
}
