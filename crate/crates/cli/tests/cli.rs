use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sbdcal::formats::read_curve_csv;
use sbdcal_cli::{head_file, method_label};

fn sbdcal(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbdcal"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("SBDCAL_OUT")
        .output()
        .unwrap()
}

fn error_record(out: &Output) -> serde_json::Value {
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr {text:?} is not JSON: {e}"))
}

#[test]
fn train_without_dataset_names_the_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let err = error_record(&sbdcal(dir.path(), &["train"]));
    assert_eq!(err["error"]["kind"], "missing_artifact");
    assert!(err["error"]["message"].as_str().unwrap().contains("manifest.json"));
}

#[test]
fn artifacts_from_another_config_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sbdcal(dir.path(), &["--n-samples", "40", "generate"]).status.success());
    let err = error_record(&sbdcal(dir.path(), &["--n-samples", "40", "--seed", "1", "train"]));
    assert_eq!(err["error"]["kind"], "digest_mismatch");
}

#[test]
fn generate_is_byte_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = sbdcal(d.path(), &["--n-samples", "60", "--seed", "4", "generate"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["dataset/manifest.json", "dataset/curves.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn simulate_writes_a_full_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("p.json");
    fs::write(
        &params,
        r#"{"temperature": 300, "workfunction": 5.2, "mu_max": 153, "mu_min": 55,
            "n_ref": 2.5e17, "alpha": 2.8, "theta": 2.3}"#,
    )
    .unwrap();
    let csv = dir.path().join("iv.csv");
    let out = sbdcal(dir.path(), &["simulate", "--params", params.to_str().unwrap(), "--output", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let curve = read_curve_csv(&csv).unwrap();
    assert_eq!(curve.voltages.len(), 52);
    assert!(curve.currents.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn inverted_mobilities_are_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("p.json");
    fs::write(
        &params,
        r#"{"temperature": 300, "workfunction": 5.2, "mu_max": 50, "mu_min": 55,
            "n_ref": 2.5e17, "alpha": 2.8, "theta": 2.3}"#,
    )
    .unwrap();
    let out = sbdcal(dir.path(), &["simulate", "--params", params.to_str().unwrap(), "--output", "x.csv"]);
    assert_eq!(error_record(&out)["error"]["kind"], "domain");
}

#[test]
fn config_applies_overrides_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbdcal(dir.path(), &["--preset", "desk", "--seed", "7", "--lambda", "0.1", "--snr-db", "inf", "config"]);
    assert!(out.status.success());
    let cfg: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg["sampling"]["n_samples"], 2000);
    assert_eq!(cfg["sampling"]["seed"], 7);
    assert_eq!(cfg["train"]["lambdas"], serde_json::json!([0.1]));
    assert!(cfg["head"]["snr_db"].is_null());

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"sampling": {"n_sample": 10}}"#).unwrap();
    let err = error_record(&sbdcal(dir.path(), &["--config", bad.to_str().unwrap(), "config"]));
    assert_eq!(err["error"]["kind"], "config");
}

#[test]
fn methods_are_labelled_by_lambda() {
    assert_eq!(method_label(0.0), "AE-NN");
    assert_eq!(method_label(0.02), "AE-PINN");
    assert_eq!(head_file(0.02), "models/head_lambda_0.02.json");
}
