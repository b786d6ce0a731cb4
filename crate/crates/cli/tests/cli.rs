use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn infocap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infocap"))
        .args(args)
        .env_remove("INFOCAP_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn shipped(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn gaussian_cr_reports_unit_triple() {
    let out = infocap(&["run", &shipped("gaussian_cr.toml")]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report(&out);
    assert_eq!(r["pass"], true);
    let c = &r["result"]["estimation"]["crlb"][0];
    assert!((c["variance"].as_f64().unwrap() - 1.0).abs() < 0.02);
    assert!((c["crlb"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!((c["inverse_diagonal"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    for check in r["checks"].as_array().unwrap() {
        for key in ["lhs", "rhs", "tolerance", "pass"] {
            assert!(check.get(key).is_some(), "check without {key}");
        }
    }
}

#[test]
fn minkowski_gaussian_is_negative_and_flagged() {
    let out = infocap(&["run", &shipped("minkowski_gaussian.toml")]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let total = r["result"]["capacity"]["total"].as_f64().unwrap();
    assert!((total + 2.0).abs() < 1e-2, "{total}");
    let causality = &r["result"]["estimation"]["causality"];
    assert_eq!(causality["non_causal_channels"], serde_json::json!([0]));
    assert_eq!(causality["stam_defined"], false);
}

#[test]
fn every_shipped_config_passes_and_round_trips() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let p = path.to_string_lossy().into_owned();
        let out = infocap(&["run", &p]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{p}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let first = infocap(&["check", &p]);
        assert_eq!(first.status.code(), Some(0), "{p}");
        let dir = tempfile::tempdir().unwrap();
        let again = write_config(
            dir.path(),
            "again.toml",
            &String::from_utf8_lossy(&first.stdout),
        );
        let second = infocap(&["check", &again]);
        assert_eq!(first.stdout, second.stdout, "{p} does not round-trip");
    }
}

const BASE: &str = r#"
kind = "fisher"
seed = 2

[model]
family = "gaussian"
channels = 2
dim = 1
covariance = [[1.0]]

[metric]
kind = "euclidean"
dim = 1

[estimation]
draws = 2000
estimator = { kind = "sample_mean" }
"#;

#[test]
fn unknown_keys_and_bad_values_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write_config(
        dir.path(),
        "typo.toml",
        &BASE.replace("draws = 2000", "draws = 2000\nsamples = 3"),
    );
    let out = infocap(&["run", &typo]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("samples") && err.contains("line"), "{err}");

    let shape = write_config(
        dir.path(),
        "shape.toml",
        &BASE.replace("covariance = [[1.0]]", "covariance = [[1.0, 0.1]]"),
    );
    let out = infocap(&["run", &shape]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.covariance"));

    let missing = infocap(&["run", "/nonexistent/config.toml"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn failing_check_exits_1_and_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("kinematic_boost.toml"))
        .unwrap()
        .replace("forms = 5e-3", "forms = 1e-12");
    let p = write_config(dir.path(), "tight.toml", &text);
    let out = infocap(&["run", &p]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("failed checks: amplitude form vs probability form"),
        "{err}"
    );
}

fn strip_timestamp(mut v: Value) -> Value {
    v["provenance"].as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn identical_seed_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "base.toml", BASE);
    let a = strip_timestamp(report(&infocap(&["run", &p])));
    let b = strip_timestamp(report(&infocap(&["run", &p])));
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    let c = strip_timestamp(report(&infocap(&["run", &p, "--seed", "99"])));
    assert_eq!(c["provenance"]["seed"], 99);
    assert_ne!(a["result"]["estimation"], c["result"]["estimation"]);
}

#[test]
fn output_directory_from_flag_or_environment() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "base.toml", BASE);
    let out_dir = dir.path().join("flag");
    let out = infocap(&[
        "--out",
        out_dir.to_str().unwrap(),
        "--format",
        "csv",
        "run",
        &p,
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out_dir.join("base.report.json").exists());
    let channels = std::fs::read_to_string(out_dir.join("base.channels.csv")).unwrap();
    assert_eq!(channels.lines().count(), 3);
    assert!(channels.starts_with("channel,fisher,variance"));

    let env_dir = dir.path().join("env");
    let out = Command::new(env!("CARGO_BIN_EXE_infocap"))
        .args(["run", &p])
        .env("INFOCAP_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(env_dir.join("base.report.json").exists());
    assert!(out.stdout.is_empty());
}

#[test]
fn sweep_rows_and_monotonicity() {
    let out = infocap(&[
        "--format",
        "csv",
        "sweep",
        &shipped("sweep_gaussian.toml"),
        "--n-max",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    assert_eq!(text.lines().count(), 2, "{text}");

    let out = infocap(&["sweep", &shipped("sweep_gaussian.toml"), "--n-max", "4"]);
    let r = report(&out);
    let rows = r["result"]["sweep"]["rows"].as_array().unwrap();
    let one = rows[0]["capacity"].as_f64().unwrap();
    for (i, row) in rows.iter().enumerate() {
        let v = row["capacity"].as_f64().unwrap();
        assert!((v - (i + 1) as f64 * one).abs() < 1e-12);
    }
    assert_eq!(r["result"]["sweep"]["monotonicity"], "holds");

    let out = infocap(&["sweep", &shipped("minkowski_gaussian.toml"), "--n-max", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        report(&out)["result"]["sweep"]["monotonicity"],
        "not_applicable"
    );

    let out = infocap(&["sweep", &shipped("maxwell_plane.toml"), "--n-max", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exported_field_reloads_from_a_file_source() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("fourier_mode.toml")).unwrap()
        + "\n[output]\nfields = true\n";
    let p = write_config(dir.path(), "mode.toml", &text);
    let out_dir = dir.path().join("out");
    let out = infocap(&["--out", out_dir.to_str().unwrap(), "run", &p]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out_dir.join("mode.amplitude.bin").exists());
    assert!(out_dir.join("mode.amplitude.json").exists());
    assert!(out_dir.join("mode.momentum.bin").exists());

    let reload = r#"
kind = "fourier"

[field]
file = "out/mode.amplitude.bin"
"#;
    let q = write_config(dir.path(), "reload.toml", reload);
    let out = infocap(&["run", &q]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cap = report(&out)["result"]["momentum_capacity"]
        .as_f64()
        .unwrap();
    assert!((cap - 64.0).abs() < 1e-9, "{cap}");
}

#[test]
fn verify_filter_runs_only_matching_criteria() {
    let out = infocap(&["verify", "--filter", "fourier"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    let ids: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with('['))
        .map(|l| l[7..9].trim())
        .collect();
    assert_eq!(ids, vec!["6", "7", "8", "11"]);
    let none = infocap(&["verify", "--filter", "nothing-matches"]);
    assert_eq!(none.status.code(), Some(2));
}
