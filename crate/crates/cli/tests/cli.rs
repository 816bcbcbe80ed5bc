use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};
use volterra_ergodic::pathcsv::read_paths;

fn volterra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_volterra"))
        .args(args)
        .env_remove("VOLTERRA_SEED")
        .output()
        .expect("binary runs")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate_fbm(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--process", "fbm", "--hurst", "0.7", "--T", "1", "--n", "64", "--paths", "100", "--seed", "42", "--out", path_arg(out)];
    args.extend_from_slice(extra);
    volterra(&args)
}

#[test]
fn simulate_shape_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert!(simulate_fbm(&a, &[]).status.success());
    assert!(simulate_fbm(&b, &[]).status.success());
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# spec=fbm(H=0.7), beta=0.7, seed=42"));
    let rows = &lines[1..];
    assert_eq!(rows.len(), 1 + 65);
    assert!(rows.iter().all(|r| r.split(',').count() == 101));
}

#[test]
fn csv_round_trip_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    assert!(simulate_fbm(&a, &[]).status.success());
    let parsed = read_paths(fs::File::open(&a).unwrap()).unwrap();
    let mut again = Vec::new();
    volterra_ergodic::pathcsv::write_paths(&mut again, &parsed.ensemble, None).unwrap();
    assert_eq!(String::from_utf8(again).unwrap(), fs::read_to_string(&a).unwrap());
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert!(simulate_fbm(&a, &[]).status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_volterra"))
        .args(["simulate", "--process", "fbm", "--hurst", "0.7", "--n", "64", "--paths", "100", "--out", path_arg(&b)])
        .env("VOLTERRA_SEED", "42")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn invalid_hurst_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = volterra(&["simulate", "--process", "fbm", "--hurst", "1.2", "--out", path_arg(&dir.path().join("x.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn every_process_simulates() {
    let dir = tempfile::tempdir().unwrap();
    for (p, flag, v) in [("fbm", "--hurst", "0.3"), ("nalpha", "--alpha", "-0.25"), ("bridge", "--alpha", "0.5"), ("mh", "--hurst", "0.7"), ("yh", "--hurst", "0.25")] {
        let f = dir.path().join(format!("{p}.csv"));
        let out = volterra(&["simulate", "--process", p, flag, v, "--n", "16", "--paths", "3", "--out", path_arg(&f)]);
        assert!(out.status.success(), "{p}: {}", String::from_utf8_lossy(&out.stderr));
        let e = read_paths(fs::File::open(&f).unwrap()).unwrap().ensemble;
        assert_eq!((e.n_paths(), e.n_points()), (3, 17));
    }
    let f = dir.path().join("bad.csv");
    assert_eq!(volterra(&["simulate", "--process", "nalpha", "--n", "4", "--out", path_arg(&f)]).status.code(), Some(2));
}

#[test]
fn forward_transform_and_iterates() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.csv");
    assert!(simulate_fbm(&x, &[]).status.success());
    let once = dir.path().join("once.csv");
    let twice = dir.path().join("twice.csv");
    let iter2 = dir.path().join("iter2.csv");
    assert!(volterra(&["transform", "--input", path_arg(&x), "--alpha", "0.2", "--beta", "0.7", "--out", path_arg(&once)]).status.success());
    assert!(volterra(&["transform", "--input", path_arg(&once), "--alpha", "0.2", "--out", path_arg(&twice)]).status.success());
    assert!(volterra(&["transform", "--input", path_arg(&x), "--alpha", "0.2", "--iterate", "2", "--out", path_arg(&iter2)]).status.success());
    let (a, b) = (read_paths(fs::File::open(&x).unwrap()).unwrap(), read_paths(fs::File::open(&once).unwrap()).unwrap());
    assert_eq!(a.ensemble.grid(), b.ensemble.grid());
    assert_eq!(a.ensemble.n_paths(), b.ensemble.n_paths());
    assert_eq!(fs::read(&twice).unwrap(), fs::read(&iter2).unwrap());
}

#[test]
fn beta_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.csv");
    assert!(simulate_fbm(&x, &[]).status.success());
    let out = volterra(&["transform", "--input", path_arg(&x), "--alpha", "0.2", "--beta", "0.5", "--out", path_arg(&dir.path().join("y.csv"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn inverse_needs_extension_and_reports_bound() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.csv");
    assert!(simulate_fbm(&x, &[]).status.success());
    let y = dir.path().join("y.csv");
    let out = volterra(&["transform", "--input", path_arg(&x), "--alpha", "0.2", "--inverse", "--out", path_arg(&y)]);
    assert_eq!(out.status.code(), Some(2));

    let ext = dir.path().join("ext.csv");
    assert!(simulate_fbm(&ext, &["--ext", "32"]).status.success());
    let fwd = dir.path().join("fwd.csv");
    assert!(volterra(&["transform", "--input", path_arg(&ext), "--alpha", "0.2", "--out", path_arg(&fwd)]).status.success());
    let inv = dir.path().join("inv.csv");
    let out = volterra(&["transform", "--input", path_arg(&fwd), "--alpha", "0.2", "--inverse", "--out", path_arg(&inv)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let back = read_paths(fs::File::open(&inv).unwrap()).unwrap();
    let bound = back.truncation_bound.expect("bound column");
    let orig = read_paths(fs::File::open(&ext).unwrap()).unwrap().ensemble.truncate_at(1.0).unwrap();
    assert_eq!(back.ensemble.grid(), orig.grid());
    // Recovery error stays within the truncation bound plus a discretization allowance.
    for k in 0..orig.n_points() {
        for p in 0..orig.n_paths() {
            let err = (back.ensemble.value(p, k) - orig.value(p, k)).abs();
            assert!(err <= bound[k] + 0.5, "t={} err={err} bound={}", orig.grid().points()[k], bound[k]);
        }
    }
}

#[test]
fn kernel_eval_values() {
    let s = |args: &[&str]| -> String {
        let mut a = vec!["kernel-eval"];
        a.extend_from_slice(args);
        let out = volterra(&a);
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap().trim().to_string()
    };
    assert_eq!(s(&["--hurst", "0.5", "--t", "2", "--s", "1"]), "1");
    let v1: f64 = s(&["--hurst", "0.7", "--t", "2", "--s", "1"]).parse().unwrap();
    let v2: f64 = s(&["--hurst", "0.7", "--t", "4", "--s", "2"]).parse().unwrap();
    assert!((v2 / v1 - 2f64.powf(0.2)).abs() < 1e-12);
    assert_eq!(s(&["--hurst", "0.7", "--t", "1", "--s", "2"]), "0");
    assert_eq!(s(&["--kernel", "markov", "--alpha", "0", "--beta", "1", "--t", "4", "--s", "1"]), "2");
    assert_eq!(volterra(&["kernel-eval", "--hurst", "0.7", "--t", "1", "--s", "-1"]).status.code(), Some(2));
}

#[test]
fn verify_kernels_passes_quickly_and_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let t0 = Instant::now();
    let out = volterra(&["verify", "--suite", "kernels", "--seed", "7", "--out", path_arg(&a)]);
    assert!(t0.elapsed() < Duration::from_secs(60));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let first = fs::read(&a).unwrap();
    assert!(volterra(&["verify", "--suite", "kernels", "--seed", "7", "--out", path_arg(&a)]).status.success());
    assert_eq!(first, fs::read(&a).unwrap());
    let json: serde_json::Value = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
    assert_eq!(json["config"]["suite"], "kernels");
    assert_eq!(json["pass"], true);
    for r in json["reports"].as_array().unwrap() {
        for key in ["test", "params", "statistics", "threshold", "pass", "seed", "wall_time_s"] {
            assert!(r.get(key).is_some(), "report lacks {key}");
        }
    }
}

#[test]
fn unknown_suite_is_a_usage_error() {
    assert_eq!(volterra(&["verify", "--suite", "nope"]).status.code(), Some(2));
}
