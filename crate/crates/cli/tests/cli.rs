use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn cwspin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cwspin"))
        .args(args)
        .output()
        .expect("cwspin runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cwspin-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn exit_codes() {
    assert_eq!(cwspin(&["--help"]).status.code(), Some(0));
    assert_eq!(cwspin(&["landscape", "--nonsense"]).status.code(), Some(1));
    assert_eq!(cwspin(&["minima", "--temp", "-1"]).status.code(), Some(1));
    assert_eq!(cwspin(&["minima", "--g", "0.1"]).status.code(), Some(1));
    assert_eq!(cwspin(&["minima", "--l", "21"]).status.code(), Some(1));
    assert_eq!(
        cwspin(&["oracle", "--l", "20", "--n-list", "400"])
            .status
            .code(),
        Some(1)
    );
    // Nothing to find when every coupling vanishes.
    assert_eq!(cwspin(&["critical", "--j4", "0"]).status.code(), Some(2));
}

#[test]
fn csv_grid_has_provenance_header() {
    let out = cwspin(&["landscape", "--resolution", "11"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# cwspin "));
    assert!(lines[1].starts_with("# config {"));
    assert!(lines[2].starts_with("# provenance sha256:"));
    assert_eq!(lines[3], "m1,m2,feasible,F");
    assert_eq!(lines.len(), 4 + 121);
    // (1, 0) is outside the simplex and left blank.
    assert!(lines.contains(&"1.00000000000,0,0,"));
    assert!(lines.iter().any(|l| l.starts_with("0,0,1,-0.250000000000")));
}

#[test]
fn profile_mode_reports_both_curves() {
    let out = cwspin(&[
        "landscape",
        "--profile",
        "--g",
        "0.15",
        "--sector",
        "0",
        "--resolution",
        "3",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(3).collect();
    assert_eq!(rows[0], "m1,m2,feasible,F,F_uncoupled");
    // At m2 = 0 the coupling adds −g·1.
    assert_eq!(rows[1], "0,0,1,-0.400000000000,-0.250000000000");
    assert_eq!(rows.len(), 4);
}

#[test]
fn json_reports_share_a_layout() {
    for cmd in ["minima", "critical", "oracle"] {
        let out = cwspin(&[cmd, "--seed", "3"]);
        assert!(out.status.success(), "{cmd}");
        let report = json(&out);
        let keys: Vec<&String> = report.as_object().unwrap().keys().collect();
        assert_eq!(
            keys,
            ["header", "config", "results", "residuals", "status"],
            "{cmd}"
        );
        assert_eq!(report["status"], "ok", "{cmd}");
    }
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = scratch("cfg");
    let path = dir.join("run.json");
    std::fs::write(&path, r#"{"temp": 0.3, "j2": 0.1, "seed": 9}"#).unwrap();
    let report = json(&cwspin(&[
        "minima",
        "--config",
        path.to_str().unwrap(),
        "--temp",
        "0.25",
    ]));
    assert_eq!(report["config"]["temp"], 0.25);
    assert_eq!(report["config"]["j2"], 0.1);
    assert_eq!(report["config"]["seed"], 9);
    assert_eq!(report["config"]["j4"], 1.0);
    std::fs::write(&path, r#"{"temperature": 0.3}"#).unwrap();
    assert_eq!(
        cwspin(&["minima", "--config", path.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn reruns_are_byte_identical() {
    for args in [
        vec!["symcheck", "--seed", "42", "--samples", "200"],
        vec!["minima", "--l", "3", "--temp", "0.05", "--seed", "5"],
        vec!["landscape", "--resolution", "31", "--format", "json"],
    ] {
        assert_eq!(cwspin(&args).stdout, cwspin(&args).stdout, "{args:?}");
    }
    let a = json(&cwspin(&["symcheck", "--seed", "1", "--samples", "50"]));
    let b = json(&cwspin(&["symcheck", "--seed", "2", "--samples", "50"]));
    assert_ne!(a["header"]["provenance"], b["header"]["provenance"]);
}

#[test]
fn critical_values_for_spin_one() {
    let report = json(&cwspin(&["critical", "--temp", "0.2"]));
    let r = &report["results"];
    assert!((r["spinodal"]["value"].as_f64().unwrap() - 0.328257).abs() < 5e-6);
    assert!((r["critical_temperature"]["value"].as_f64().unwrap() - 0.228165).abs() < 5e-6);
    assert!((r["critical_coupling"]["value"].as_f64().unwrap() - 0.0853209).abs() < 1e-6);
    assert!(
        (r["critical_coupling"]["barrier_location"].as_f64().unwrap() - 0.4352046).abs() < 1e-6
    );
    // Couplings scale the temperatures.
    let doubled = json(&cwspin(&["critical", "--j4", "2"]));
    let t2 = doubled["results"]["spinodal"]["value"].as_f64().unwrap();
    assert!((t2 - 2.0 * r["spinodal"]["value"].as_f64().unwrap()).abs() < 1e-9);
}

#[test]
fn critical_for_other_spins_reports_partial_results() {
    let report = json(&cwspin(&["critical", "--l", "3"]));
    assert_eq!(report["status"], "partial");
    assert!(report["results"]["critical_coupling"]["error"].is_string());
    let t_ms = report["results"]["spinodal"]["value"].as_f64().unwrap();
    let t_c = report["results"]["critical_temperature"]["value"]
        .as_f64()
        .unwrap();
    assert!(t_c < t_ms);
}

#[test]
fn symcheck_spin_one_example() {
    let report = json(&cwspin(&["symcheck", "--samples", "100"]));
    assert_eq!(report["results"]["spin_one_example"]["pass"], true);
    assert_eq!(report["status"], "ok");
}

#[test]
fn oracle_free_limit_and_brute_force() {
    let report = json(&cwspin(&["oracle", "--j4", "0", "--n-list", "10,20"]));
    let want = -0.2 * 3f64.ln();
    for row in report["results"]["sizes"].as_array().unwrap() {
        assert!((row["F_N"].as_f64().unwrap() - want).abs() < 1e-12);
    }
    let rel = report["results"]["brute_force"]["relative_difference"]
        .as_f64()
        .unwrap();
    assert!(rel < 1e-12);
    let full = json(&cwspin(&["oracle"]));
    assert_eq!(full["results"]["monotone_approach"], true);
}
