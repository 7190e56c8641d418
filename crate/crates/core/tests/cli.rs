use std::path::Path;
use std::process::{Command, Output};

use purification::histogram::{pure_count_model, raw_count_model, PeakCounts, SetupGeometry};
use serde_json::Value;

fn purify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_purify"))
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Data rows of a CSV output, header first.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const SIMULATE: &str = r#"{
  "scenarios": [
    {"id": "perfect", "model": {"kind": "constant", "c": 1.0}},
    {"id": "no-etalon", "model": {"kind": "constant", "v_raw": 0.5829}, "noise": {"g2": 0.07}}
  ]
}"#;

#[test]
fn simulate_reports_each_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.json", SIMULATE);
    let o = purify(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("# command: simulate\n# input: "));
    let rows = csv_rows(&text);
    assert_eq!(
        rows[0],
        [
            "scenario",
            "v_raw",
            "v_pure",
            "improvement",
            "success_probability"
        ]
    );
    assert_eq!(rows[1][0], "perfect");
    let f = |s: &str| s.parse::<f64>().unwrap();
    assert!((f(&rows[1][1]) - 1.0).abs() < 1e-12 && (f(&rows[1][2]) - 1.0).abs() < 1e-12);
    assert!(f(&rows[1][3]).abs() < 1e-12);
    assert_eq!(f(&rows[1][4]), 0.25);
    // multiphoton events pull the reported raw visibility below c^2
    assert!(f(&rows[2][1]) < 0.5829);
    assert!((f(&rows[2][2]) - 0.685).abs() < 0.05);
    assert!(f(&rows[2][3]) > 0.05);
}

#[test]
fn simulate_json_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.json", SIMULATE);
    let out = dir.path().join("out.json");
    let o = purify(&[
        "simulate",
        "--config",
        &cfg,
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(doc["command"], "simulate");
    assert_eq!(doc["input"]["scenarios"][0]["id"], "perfect");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = write(dir.path(), "m.json", r#"{"scenarios": [{"id": "a"}]}"#);
    let o = purify(&["simulate", "--config", &missing]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("model"), "{}", stderr(&o));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    let empty = write(
        dir.path(),
        "e.json",
        r#"{"sweep": {"axis": "theta", "grid": {"start": 0, "stop": 45, "points": 0}}}"#,
    );
    assert_eq!(
        purify(&["sweep", "--config", &empty]).status.code(),
        Some(2)
    );
    assert_eq!(purify(&["simulate"]).status.code(), Some(2));
    assert_eq!(
        purify(&["simulate", "--config", "/nonexistent.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(purify(&["frobnicate"]).status.code(), Some(2));
    let bad = write(
        dir.path(),
        "b.json",
        r#"{"scenarios": [{"id": "a", "model": {"kind": "constant", "c": 1.5}}]}"#,
    );
    assert_eq!(
        purify(&["simulate", "--config", &bad]).status.code(),
        Some(2)
    );
}

#[test]
fn sweeps_write_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            r#"{"sweep": {"axis": "raw_visibility", "grid": {"start": 0.5, "stop": 1.0, "points": 6}, "models": ["multipermanent", "pure_dephasing"]}}"#,
            vec!["v_raw", "v_pure_multipermanent", "v_pure_pure_dephasing"],
            6,
        ),
        (
            r#"{"sweep": {"axis": "theta", "grid": {"start": 0, "stop": 45, "points": 4}}}"#,
            vec!["theta_deg", "v_raw", "v_pure_same", "v_pure_opposite"],
            4,
        ),
        (
            r#"{"sweep": {"axis": "reflectivity", "coupler": "final", "grid": {"start": 0.3, "stop": 0.7, "points": 5}, "v_raw": 0.8}}"#,
            vec!["reflectivity", "v_raw", "v_pure", "improvement"],
            5,
        ),
        (
            r#"{"sweep": {"axis": "g2", "grid": {"start": 0, "stop": 0.04, "points": 3}, "v_raw": 0.8}}"#,
            vec!["g2", "v_raw", "v_pure", "improvement"],
            3,
        ),
    ];
    for (text, header, n) in cases {
        let cfg = write(dir.path(), "sweep.json", text);
        let o = purify(&["sweep", "--config", &cfg, "--workers", "2"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let rows = csv_rows(&stdout(&o));
        assert_eq!(rows[0], header);
        assert_eq!(rows.len(), n + 1);
    }
}

fn counts_file(dir: &Path, name: &str, central: f64, side: f64) -> String {
    let text = format!("peak,counts\n-2,{side}\n-1,{side}\n0,{central}\n1,{side}\n2,{side}\n");
    write(dir, name, &text)
}

fn fit_fixture(dir: &Path) {
    let g = SetupGeometry::default();
    let pc = PeakCounts::new(0.0, 0.0, 1e6, 1000.0).unwrap();
    let (c, s) = raw_count_model(0.3, 0.9, &g, &pc).unwrap();
    counts_file(dir, "raw.csv", c, s);
    let (c, s) = pure_count_model(0.3, 0.83, 0.91, &g, &pc).unwrap();
    counts_file(dir, "pure.csv", c, s);
    write(
        dir,
        "raw.json",
        r#"{"counts_file": "raw.csv", "repetition_rate": 1e6, "integration_time": 1000}"#,
    );
    write(
        dir,
        "pure.json",
        r#"{"counts_file": "pure.csv", "repetition_rate": 1e6, "integration_time": 1000, "mode": "pure"}"#,
    );
}

fn fitted(o: &Output) -> (f64, f64) {
    let rows = csv_rows(&stdout(o));
    let col = |name: &str| rows[0].iter().position(|c| c == name).unwrap();
    (
        rows[1][col("t")].parse().unwrap(),
        rows[1][col("v")].parse().unwrap(),
    )
}

#[test]
fn fit_recovers_synthetic_parameters() {
    let dir = tempfile::tempdir().unwrap();
    fit_fixture(dir.path());
    let raw = dir.path().join("raw.json");
    let o = purify(&["fit", "--config", raw.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (t, v) = fitted(&o);
    assert!((t - 0.3).abs() < 1e-6 && (v - 0.9).abs() < 1e-6);
    assert!(stderr(&o).contains("V = 0.9"));

    let pure = dir.path().join("pure.json");
    let o = purify(&["fit", "--config", pure.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--v-raw"));
    let o = purify(&["fit", "--config", pure.to_str().unwrap(), "--v-raw", "0.83"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (t, v) = fitted(&o);
    assert!((t - 0.3).abs() < 1e-6 && (v - 0.91).abs() < 1e-6);
}

#[test]
fn fit_uncertainties_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    fit_fixture(dir.path());
    let cfg = dir.path().join("raw.json");
    let cfg = cfg.to_str().unwrap();
    let args = [
        "fit",
        "--config",
        cfg,
        "--mc-resamples",
        "500",
        "--seed",
        "7",
    ];
    let a = purify(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let b = purify(&[&args[..], &["--workers", "1"]].concat());
    assert_eq!(a.stdout, b.stdout);
    assert!(stderr(&a).contains("sigma_V"));
    assert_eq!(
        purify(&["fit", "--config", cfg, "--mc-resamples", "500"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn empty_counts_are_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    counts_file(dir.path(), "zero.csv", 0.0, 0.0);
    let cfg = write(
        dir.path(),
        "zero.json",
        r#"{"counts_file": "zero.csv", "repetition_rate": 1e6, "integration_time": 1}"#,
    );
    assert_eq!(purify(&["fit", "--config", &cfg]).status.code(), Some(3));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "mc.json",
        r#"{"gamma": 1.0, "x": [0.2], "n_samples": 50, "dt": 0.05, "horizon": 12}"#,
    );
    assert_eq!(
        purify(&["mc-dephasing", "--config", &cfg]).status.code(),
        Some(2)
    );
    let a = purify(&["mc-dephasing", "--config", &cfg, "--seed", "3"]);
    let b = purify(&[
        "mc-dephasing",
        "--config",
        &cfg,
        "--seed",
        "3",
        "--workers",
        "3",
    ]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("# seed: 3"));
    assert_eq!(csv_rows(&text).len(), 2);

    let sim = write(dir.path(), "sim.json", SIMULATE);
    let x = purify(&["simulate", "--config", &sim, "--format", "json"]);
    let y = purify(&[
        "simulate",
        "--config",
        &sim,
        "--format",
        "json",
        "--workers",
        "2",
    ]);
    assert_eq!(x.stdout, y.stdout);
}
