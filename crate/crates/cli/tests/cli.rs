use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dirac-lasso"));
    cmd.env_remove("DIRAC_LASSO_OUT");
    cmd
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn holonomy_halfturn_exits_zero_with_minus_sign() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["holonomy", "--config", fixture("holonomy_halfturn.json").to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(r["results"]["sign"], -1);
    assert_eq!(r["passed"], true);
    let frames = std::fs::read_to_string(dir.path().join("frames.csv")).unwrap();
    assert_eq!(frames.lines().next(), Some("t,f_0_0,f_1_0"));
}

#[test]
fn lasso_conical_certificate_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["lasso-scan", "--config", fixture("lasso_conical.json").to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let cert: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("certificate.json")).unwrap()).unwrap();
    assert!(cert["r"].as_f64().unwrap() <= 1e-10);
    assert!(cert["gap"].as_f64().unwrap() <= 1e-10);
    for key in ["theta", "x", "y", "lambda_a", "lambda_b", "residuals", "window", "operator_norm"] {
        assert!(cert.get(key).is_some(), "missing {key}");
    }
    let map = std::fs::read_to_string(dir.path().join("gap_map.csv")).unwrap();
    assert_eq!(map.lines().next(), Some("r,theta,min_gap"));
}

#[test]
fn malformed_window_exits_one_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["lasso-scan", "--config", fixture("bad_window.json").to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("`window`"), "{stderr}");
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn failed_expectation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["holonomy", "--config", fixture("wrong_sign.json").to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(dir.path())["passed"], false);
}

#[test]
fn kind_mismatch_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["spectrum", "--config", fixture("holonomy_halfturn.json").to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`kind`"));
}

#[test]
fn missing_config_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["spectrum", "--config", "/nonexistent/config.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn randomized_model_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture("unseeded.json");
    let out = run(&["spectrum", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
    let out = run(&["spectrum", "--config", config.to_str().unwrap(), "--seed", "4"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn seeded_runs_are_bit_reproducible() {
    let config = fixture("spin_spectrum.json");
    let spectra = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&["spectrum", "--config", config.to_str().unwrap(), "--seed", seed, "--threads", "2"], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let mut r = report(dir.path());
        r.as_object_mut().unwrap().remove("timings_s");
        (std::fs::read(dir.path().join("spectra.csv")).unwrap(), r)
    };
    let (a, ra) = spectra("9");
    let (b, rb) = spectra("9");
    let (c, _) = spectra("10");
    assert_eq!(a, b);
    assert_eq!(ra, rb);
    assert_ne!(a, c);
    assert!(String::from_utf8(a).unwrap().starts_with("j,t,lambda\n"));
}

#[test]
fn env_var_sets_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["holonomy", "--config", fixture("holonomy_halfturn.json").to_str().unwrap()])
        .env("DIRAC_LASSO_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn reproduce_all_passes_and_is_deterministic() {
    let table = || {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&["reproduce-all"], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
        let stdout = String::from_utf8(out.stdout).unwrap();
        assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 10);
        let summary: Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("reproduce.json")).unwrap()).unwrap();
        assert_eq!(summary["criteria"].as_array().unwrap().len(), 10);
        stdout
    };
    assert_eq!(table(), table());
}

#[test]
fn tampered_tolerance_fails_its_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["reproduce-all", "--config", fixture("tampered_tolerances.json").to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let failing: Vec<&str> = stdout.lines().filter(|l| l.starts_with("[FAIL]")).collect();
    assert_eq!(failing.len(), 1, "{stdout}");
    assert!(failing[0].contains("circle oracle"));
}
