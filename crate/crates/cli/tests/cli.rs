use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn repo(path: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(path)
}

fn obscert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obscert"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Value {
    let out = obscert(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn with_config(cfg: &str, out: &Path, args: &[&str]) -> Output {
    let mut full = vec!["--config", cfg, "--out", out.to_str().unwrap()];
    full.extend_from_slice(args);
    obscert(&full)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// CSV rows without the provenance comment and header.
fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn compile_current_detectability_is_small() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let s = run_ok(&["--out", out, "compile", "--formula", "forall s2. G out_close(0.5) -> F G state_close(0.8)"]);
    let n = s["states"].as_u64().unwrap();
    assert!((1..=8).contains(&n), "{n} states");
    assert!(dir.path().join("dfa.txt").exists());
    assert_eq!(read_json(&dir.path().join("dfa.json"))["states"], s["states"]);
}

#[test]
fn compile_true_has_one_state() {
    let dir = tempfile::tempdir().unwrap();
    let s = run_ok(&["--out", dir.path().to_str().unwrap(), "compile", "--formula", "forall s2. true"]);
    assert_eq!(s["states"], 1);
}

#[test]
fn malformed_formula_reports_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let out = obscert(&["--out", dir.path().to_str().unwrap(), "compile", "--formula", "forall s2. G (out_close(0.5) &"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["exit_code"], 2);
    assert!(err["message"].as_str().unwrap().contains("column"), "{err}");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = obscert(&["--config", "/nonexistent/run.toml", "dp"]);
    assert_eq!(missing.status.code(), Some(2));
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "seed = 1\nbogus_key = 3\n").unwrap();
    assert_eq!(obscert(&["--config", bad.to_str().unwrap(), "dp"]).status.code(), Some(2));
    let no_config = obscert(&["dp"]);
    assert_eq!(no_config.status.code(), Some(2));
}

#[test]
fn finite_report_matches_exact_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo("configs/finite_toy.toml");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(with_config(cfg, dir.path(), &["dp"]).status.code(), Some(0));
    let out = with_config(cfg, dir.path(), &["report"]);
    let report = read_json(&dir.path().join("report.json"));
    let exact = &report["exact"];
    assert_eq!(report["verdict"], exact["verdict"], "{report}");
    let expected = if exact["verdict"] == "SATISFIED" { 0 } else { 3 };
    assert_eq!(out.status.code(), Some(expected));
    assert!(report["provenance"]["config_sha256"].as_str().unwrap().len() == 64);
}

#[test]
fn trivial_property_is_satisfied_with_bound_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo("configs/trivial.toml");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(with_config(cfg, dir.path(), &["dp"]).status.code(), Some(0));
    let out = with_config(cfg, dir.path(), &["report"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(s["verdict"], "SATISFIED");
    assert!((s["bound"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn empty_target_slice_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(repo("configs/trivial.toml")).unwrap().replace("forall s2. true", "forall s2. false");
    let cfg = dir.path().join("empty.toml");
    fs::write(&cfg, text).unwrap();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(with_config(cfg, dir.path(), &["dp"]).status.code(), Some(0));
    let table = dir.path().join("value_table.bin");
    let out = with_config(cfg, dir.path(), &["plotdata", "--table", table.to_str().unwrap(), "--t", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("plot_t0_q0.csv"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| *r.last().unwrap() == 0.0));
}

#[test]
fn plotdata_values_equal_certificate_evaluation() {
    use obscert::certify::Certificate;
    use obscert::product::ProductState;

    let dir = tempfile::tempdir().unwrap();
    let cfg = repo("configs/finite_toy.toml");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(with_config(cfg, dir.path(), &["dp"]).status.code(), Some(0));
    let s: Value = serde_json::from_slice(&with_config(cfg, dir.path(), &["plotdata", "--t", "1"]).stdout).unwrap();
    let cert = Certificate::<f64>::load(&dir.path().join("table_certificate.json")).unwrap();
    let q = s["q"].as_u64().unwrap() as u32;
    let rows = csv_rows(Path::new(s["file"].as_str().unwrap()));
    assert!(!rows.is_empty());
    for r in rows {
        let v = cert.eval(&ProductState::new(vec![r[0]], vec![r[1]], q), 1).unwrap();
        assert_eq!(v, r[2]);
    }
}

#[test]
fn artifacts_are_reproducible() {
    let cfg = repo("configs/finite_toy.toml");
    let cfg = cfg.to_str().unwrap();
    let root = tempfile::tempdir().unwrap();
    // The output directory is part of the resolved config, so both runs use the same path.
    let work = root.path().join("run");
    let first = root.path().join("first");
    for i in 0..2 {
        for cmd in ["simulate", "estimate", "dp", "report"] {
            let code = with_config(cfg, &work, &[cmd]).status.code();
            assert!(matches!(code, Some(0 | 3)), "{cmd}: {code:?}");
        }
        if i == 0 {
            fs::rename(&work, &first).unwrap();
        }
    }
    let mut names: Vec<_> = fs::read_dir(&first).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 8);
    for n in names {
        assert_eq!(fs::read(first.join(&n)).unwrap(), fs::read(work.join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn seed_changes_the_config_hash() {
    let cfg = repo("configs/finite_toy.toml");
    let cfg = cfg.to_str().unwrap();
    let d = tempfile::tempdir().unwrap();
    let hash = |seed: &str| {
        let out = obscert(&["--config", cfg, "--out", d.path().to_str().unwrap(), "--seed", seed, "simulate"]);
        assert_eq!(out.status.code(), Some(0));
        fs::read_to_string(d.path().join("trajectory_0.csv")).unwrap().lines().next().unwrap().to_string()
    };
    assert_ne!(hash("1"), hash("2"));
}
