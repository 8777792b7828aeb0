use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run(cmd: &str, config: &str, dir: &Path) -> (i32, String) {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_tangleproof"))
        .args([cmd, "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stdout).into_owned())
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap()
}

const TOY: &str = "[horseshoe]\nmodel = \"toy\"\ngrid = 4\nmax_depth = 4\n";

#[test]
fn toy_dimension_verifies() {
    let d = tempfile::tempdir().unwrap();
    let (code, text) = run("dimension", TOY, d.path());
    assert_eq!(code, 0, "{text}");
    let r = report(d.path());
    assert_eq!(r["verdict"], "VERIFIED");
    assert_eq!(r["values"]["D"], 0.0);
    let dim = (r["values"]["ln_dim_lower_root"].as_f64().unwrap()).exp();
    assert!((dim - 2f64.ln() / 3f64.ln()).abs() < 1e-6);
    assert!(d.path().join("out/dimension.csv").exists());
}

#[test]
fn reports_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run("horseshoe", TOY, a.path());
    run("horseshoe", TOY, b.path());
    for f in ["report.txt", "report.json"] {
        let x = std::fs::read(a.path().join("out").join(f)).unwrap();
        let y = std::fs::read(b.path().join("out").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let r = report(a.path());
    let cfg = std::fs::read_to_string(a.path().join("config.toml")).unwrap();
    assert_eq!(r["inputs"]["config"].as_str().unwrap().len(), 64);
    assert_eq!(cfg, TOY);
}

#[test]
fn injected_constants() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "[dimension.inject]\nc = 16.6\nepsilon = 0.88\ngamma = 47.8\ntau_l = 0.065\ntau_r = 0.0514\na_minus = 6.091\n";
    let (code, _) = run("dimension", cfg, d.path());
    assert_eq!(code, 0);
    let r = report(d.path());
    assert!((r["values"]["D"].as_f64().unwrap() - 3749.28).abs() < 0.1);
    assert!(r["values"]["dim_upper"].as_f64().unwrap() <= 0.7673);
}

#[test]
fn empty_domain_grid() {
    let d = tempfile::tempdir().unwrap();
    let (code, _) = run("domain", "[domain]\nnx = 0\nnu = 0\n", d.path());
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(d.path().join("out/domain.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn bad_config_fails() {
    let d = tempfile::tempdir().unwrap();
    let (code, text) = run("verify", "[verify]\ntabels = []\n", d.path());
    assert_ne!(code, 0);
    assert!(text.contains("verdict = FAILED"));
    let (code, _) = run("verify", "[input]\ndegree = 1\n", d.path());
    assert_ne!(code, 0);
    let (code, _) = run("verify", "[verify]\ntables = [\"missing.toml\"]\n", d.path());
    assert_ne!(code, 0);
}

#[test]
fn verify_table1_and_a_corrupted_copy() {
    let d = tempfile::tempdir().unwrap();
    let (code, text) = run("verify", "[verify]\ntables = [\"table1\"]\n", d.path());
    assert_eq!(code, 0, "{text}");
    let bad = tangleproof::tables::TABLE1.replacen("center = [0.66401000", "center = [0.71401000", 1);
    assert_ne!(bad, tangleproof::tables::TABLE1);
    std::fs::write(d.path().join("bad.toml"), bad).unwrap();
    let (code, text) = run("verify", "[verify]\ntables = [\"bad.toml\"]\nmax_shift = 0.0\n", d.path());
    assert_eq!(code, 1);
    assert!(text.contains("first failing link"), "{text}");
}

#[test]
fn tangle_matrix() {
    let d = tempfile::tempdir().unwrap();
    let (code, text) = run("tangle", "[tangle]\nn = 1\nm = 1\n", d.path());
    assert_eq!(code, 0, "{text}");
    let m = std::fs::read_to_string(d.path().join("out/transition.csv")).unwrap();
    assert_eq!(m, "1,1,0\n1,1,1\n0,1,1\n");
}
