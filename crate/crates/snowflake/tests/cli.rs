//! End-to-end checks of the command-line interface: exit codes, artifact
//! determinism, and config-file/flag precedence.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use conformal_snowflake::cli::run;

fn run_cli(args: &[&str]) -> u8 {
    let argv: Vec<OsString> = std::iter::once(OsString::from("snowflake"))
        .chain(args.iter().map(OsString::from))
        .collect();
    run(argv)
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("snowflake-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn render_is_byte_deterministic() {
    let a = tmp("a.svg");
    let b = tmp("b.svg");
    for out in [&a, &b] {
        let code = run_cli(&[
            "render",
            "--seed",
            "7",
            "--generations",
            "3",
            "--samples",
            "256",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    let svg = read(&a);
    assert_eq!(svg, read(&b), "same seed must produce identical bytes");
    assert!(svg.starts_with("<?xml"));
    assert!(svg.contains("<svg"));
    assert!(svg.contains("version=\"1.1\""));
    assert!(svg.contains("seed"), "config echo missing");
}

#[test]
fn eigen_json_report() {
    let out = tmp("eigen.json");
    let code = run_cli(&[
        "eigen",
        "--n-grid",
        "200",
        "--m-angles",
        "150",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&read(&out)).unwrap();
    let log = v["log_k_lambda"].as_f64().unwrap();
    assert!(log > 0.2 && log < 0.27, "log_13 lambda = {log}");
    assert_eq!(v["config"]["k"], 13);
    assert!(v["version"].is_string());
}

#[test]
fn bound_writes_certificate_and_ratio_csv() {
    let out = tmp("cert.json");
    let code = run_cli(&[
        "bound",
        "--mode",
        "heuristic",
        "--bound-points",
        "400",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&read(&out)).unwrap();
    assert!(v["certificate"]["beta_lower"].as_f64().unwrap() > 0.0);
    assert_eq!(v["certificate"]["rigorous"], false);
    assert!(v["version"].is_string());
    let csv = read(&out.with_extension("json.csv"));
    let rows = csv.lines().filter(|l| !l.starts_with('#')).count();
    // header row + one row per radial node
    assert_eq!(rows, 1 + 400);
}

#[test]
fn table_csv_has_a_row_per_exponent() {
    let out = tmp("table.csv");
    let code = run_cli(&[
        "table",
        "--t-list",
        "-1,1",
        "--n-grid",
        "200",
        "--m-angles",
        "120",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let csv = read(&out);
    assert!(csv.lines().next().unwrap().starts_with('#'), "comment header missing");
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 1 + 2);
    assert!(rows[0].contains("t") && rows[0].contains("log_k_lambda"));
}

#[test]
fn sweep_csv_is_byte_deterministic() {
    let a = tmp("sweep-a.csv");
    let b = tmp("sweep-b.csv");
    for out in [&a, &b] {
        let code = run_cli(&[
            "sweep",
            "--k-list",
            "12,13",
            "--l-list",
            "60,73",
            "--n-grid",
            "120",
            "--m-angles",
            "80",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    let csv = read(&a);
    assert_eq!(csv, read(&b));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4);
}

#[test]
fn mc_csv_row_per_radius() {
    let out = tmp("mc.csv");
    let code = run_cli(&[
        "mc",
        "--samples",
        "200",
        "--generations",
        "2",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let csv = read(&out);
    let rows = csv.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 10, "header plus one row per default radius");
    assert!(csv.contains("slope"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let cfg_path = tmp("config.json");
    std::fs::write(&cfg_path, r#"{"l": 60.0, "s": 1.01, "n_grid": 150, "m_angles": 100}"#)
        .unwrap();
    let out = tmp("eigen-cfg.json");
    let code = run_cli(&[
        "eigen",
        "--config",
        cfg_path.to_str().unwrap(),
        "--l",
        "73",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&read(&out)).unwrap();
    assert_eq!(v["config"]["l"], 73.0, "flag must override the file");
    assert_eq!(v["config"]["s"], 1.01, "file value must survive when not overridden");
    assert_eq!(v["config"]["n_grid"], 150);
}

#[test]
fn unknown_config_fields_are_rejected() {
    let cfg_path = tmp("bad-config.json");
    std::fs::write(&cfg_path, r#"{"l": 60.0, "sigma": 2.0}"#).unwrap();
    assert_eq!(run_cli(&["eigen", "--config", cfg_path.to_str().unwrap()]), 2);
}

#[test]
fn validation_errors_exit_2() {
    // negative slit length
    assert_eq!(run_cli(&["eigen", "--l", "-3", "--out", tmp("x.json").to_str().unwrap()]), 2);
    // radius below the critical radius is rejected before any heavy work
    assert_eq!(run_cli(&["eigen", "--radius", "50", "--out", tmp("y.json").to_str().unwrap()]), 2);
    // bad certificate mode
    assert_eq!(run_cli(&["bound", "--mode", "exact", "--out", tmp("z.json").to_str().unwrap()]), 2);
}

#[test]
fn degenerate_fixed_point_is_a_validation_error() {
    // the identity block (l = 0, s = 1) has no critical radius; that is a
    // structural property of the parameters, not a convergence failure
    assert_eq!(
        run_cli(&["eigen", "--l", "0", "--s", "1", "--out", tmp("id.json").to_str().unwrap()]),
        2
    );
}

#[test]
fn vacuous_bound_exits_4_but_still_writes_artifacts() {
    // a tiny constant test function is swamped by the fixed paper-mode
    // error budgets, so every interval ratio goes negative
    let cfg_path = tmp("vacuous-config.json");
    std::fs::write(
        &cfg_path,
        r#"{"nu_numerator": [1e-6, 0, 0, 0, 0, 0], "nu_denominator": [1, 0],
            "mode": "paper-constants", "bound_points": 12}"#,
    )
    .unwrap();
    let out = tmp("vacuous.json");
    let code = run_cli(&[
        "bound",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 4);
    let v: serde_json::Value = serde_json::from_str(&read(&out)).unwrap();
    assert!(v["certificate"]["min_ratio"].as_f64().unwrap() <= 0.0);
}

#[test]
fn io_errors_exit_5() {
    assert_eq!(
        run_cli(&["eigen", "--n-grid", "50", "--m-angles", "40", "--out", "/nonexistent-dir/a.json"]),
        5
    );
}
