//! Command-line contract: exit codes, output files and formats.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vguide(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vguide")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("process exited normally")
}

fn out_dir(dir: &Path) -> String {
    dir.to_string_lossy().into_owned()
}

#[test]
fn configuration_errors_exit_with_two() {
    assert_eq!(code(&vguide(&["threshold", "--set", "s=2"])), 2);
    assert_eq!(code(&vguide(&["threshold", "--set", "no_such_key=1"])), 2);
    assert_eq!(code(&vguide(&["threshold", "--set", "missing-equals"])), 2);
    assert_eq!(code(&vguide(&["bogus"])), 2);
    assert_eq!(code(&vguide(&["eigs", "--set", "h=1/16"])), 2, "threshold resolution floor is a configuration error");

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "s = 0.5\ns = 0.25\n").unwrap();
    let o = vguide(&["threshold", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("given twice"));
    assert_eq!(code(&vguide(&["threshold", "--config", "/nonexistent/run.cfg"])), 2);
}

#[test]
fn threshold_writes_json_with_config_and_version() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# coarse study\nh_levels = 1/32, 1/64\n").unwrap();
    let plot = dir.path().join("phi.svg");
    let o = vguide(&[
        "threshold",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        &out_dir(dir.path()),
        "--plot",
        plot.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("threshold.json")).unwrap()).unwrap();
    assert_eq!(json["command"], "threshold");
    assert_eq!(json["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(json["config"]["seed"], 7);
    assert_eq!(json["config"]["h_levels"].as_array().unwrap().len(), 2);
    let lambda = json["lambda_h"].as_f64().unwrap();
    assert!(lambda > 2.2 && lambda < 2.4, "{lambda}");
    assert!(fs::read_to_string(plot).unwrap().starts_with("<svg"));
}

#[test]
fn sweep_csv_has_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = vguide(&[
        "sweep",
        "--set",
        "angles_deg=35,55",
        "--set",
        "truncation_l=3",
        "--set",
        "k=3",
        "--set",
        "h_levels=1/32,1/64",
        "--jobs",
        "1",
        "--out",
        &out_dir(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut reader = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["alpha_rad", "lambda_1", "lambda_2", "lambda_3", "threshold", "lower_bound", "count"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    let alpha: f64 = rows[0][0].parse().unwrap();
    assert!((alpha - 35f64.to_radians()).abs() < 1e-12);
    let l1: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(l1[0] < l1[1]);
    assert!(dir.path().join("sweep.json").exists());
}

#[test]
fn failed_certificate_exits_with_four_and_still_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    // A cutoff radius this small leaves a positive Rayleigh defect.
    let o = vguide(&[
        "certify",
        "--set",
        "radii=8",
        "--set",
        "lemma=false",
        "--set",
        "ritz_extent=3",
        "--set",
        "h_levels=1/32,1/64",
        "--out",
        &out_dir(dir.path()),
    ]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("certify.json")).unwrap()).unwrap();
    assert_eq!(json["certified"], false);
    assert!(json["trial"]["min_gap"].as_f64().unwrap() > 0.0);
}
