use std::process::{Command, Output};

use serde_json::Value;

fn udw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_udw-qfi"))
        .args(args)
        .env("QFI_DETECTOR_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json_out(args: &[&str]) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = udw(&full);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn qfi_phi_at_zero_time_is_pure_state_value() {
    let v = json_out(&[
        "qfi",
        "--param",
        "phi",
        "--theta",
        "1.5707963267948966",
        "--tau",
        "0",
        "--a",
        "1",
    ]);
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 3);
    for r in results {
        let f = r["fisher"].as_f64().unwrap();
        assert!((f - 1.0).abs() < 1e-9, "{r}");
    }
}

#[test]
fn rates_numeric_matches_planck() {
    let v = json_out(&["rates", "--trajectory", "uniform", "--a", "1", "--numeric"]);
    let d = v["numeric"]["rel_diff_gamma_plus"].as_f64().unwrap();
    assert!(d <= 1e-3, "{d}");
}

#[test]
fn raw_units_conversion_is_reported() {
    let v = json_out(&[
        "--raw-units",
        "evolve",
        "--theta",
        "1",
        "--tau",
        "2",
        "--a",
        "4",
        "--omega0",
        "2",
        "--mu",
        "1",
    ]);
    let c = &v["conversion"];
    assert_eq!(c["a_rescaled"].as_f64().unwrap(), 2.0);
    let g0 = 2.0 / (2.0 * std::f64::consts::PI);
    assert!((c["gamma0"].as_f64().unwrap() - g0).abs() < 1e-15);
    assert!((c["tau_rescaled"].as_f64().unwrap() - 2.0 * g0).abs() < 1e-15);
}

#[test]
fn figure_file_output_is_monotone_and_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a.csv");
    let p2 = dir.path().join("b.csv");
    for p in [&p1, &p2] {
        let out = udw(&["figure", "fig3", "--out", p.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let a = std::fs::read(&p1).unwrap();
    assert_eq!(a, std::fs::read(&p2).unwrap());

    let mut rdr = csv::Reader::from_reader(a.as_slice());
    let header = rdr.headers().unwrap().clone();
    let col = header.iter().position(|h| h == "phi_closed_form").unwrap();
    let values: Vec<f64> = rdr
        .records()
        .map(|r| r.unwrap()[col].parse().unwrap())
        .collect();
    assert_eq!(values.len(), 201);
    assert!(values.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn sweep_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.json");
    std::fs::write(
        &cfg,
        r#"{
  "schema_version": 1,
  "axes": [{"name": "tau", "values": [0.5, 1.0]}, {"name": "theta", "start": 0.0, "stop": 3.0, "count": 4}],
  "fixed": {"a": 2.0},
  "quantities": ["phi"],
  "methods": ["closed_form", "sld_oracle"]
}"#,
    )
    .unwrap();
    let out = udw(&["sweep", cfg.to_str().unwrap(), "--format", "jsonl"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 8);
    for line in lines {
        let _: Value = serde_json::from_str(line).unwrap();
    }
}

#[test]
fn bad_config_is_input_error_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.json");
    std::fs::write(
        &cfg,
        r#"{"schema_version": 1, "axes": [], "quantities": ["phi"], "fixed": {"bogus": 1}}"#,
    )
    .unwrap();
    let out = udw(&["--json", "sweep", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "ConfigInvalid");
    assert!(!v["error"]["fields"].as_array().unwrap().is_empty());
}

#[test]
fn cli_config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("point.json");
    std::fs::write(
        &cfg,
        r#"{"schema_version": 1, "theta": 0.0, "tau": 1.0, "a": 3.0, "param": ["theta"]}"#,
    )
    .unwrap();
    let v = json_out(&[
        "--config",
        cfg.to_str().unwrap(),
        "qfi",
        "--methods",
        "closed_form",
    ]);
    assert_eq!(v["theta"].as_f64().unwrap(), 0.0);
    assert_eq!(v["results"].as_array().unwrap().len(), 1);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(udw(&["figure", "fig99"]).status.code(), Some(2));
    assert_eq!(
        udw(&["qfi", "--param", "phi", "--theta", "1", "--tau", "-1", "--a", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(udw(&["--bogus"]).status.code(), Some(2));
    assert_eq!(
        udw(&[
            "qfi",
            "--param",
            "beta",
            "--theta",
            "1",
            "--tau",
            "1",
            "--a",
            "1",
            "--methods",
            "closed_form"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn verify_single_suite() {
    let out = udw(&["verify", "--suite", "ultrarel"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("[PASS]"));
    assert_eq!(udw(&["verify", "--suite", "nope"]).status.code(), Some(2));
}
