use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn wobble(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wobble"))
        .args(args)
        .env("WOBBLE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("report is json")
}

fn gen(dir: &TempDir, name: &str, seed: &str, theta: &str, bumps: &str) -> PathBuf {
    let p = path(dir, name);
    let out = wobble(&["gen-terrain", "--seed", seed, "--theta", theta, "--bumps", bumps, "--out", s(&p)]);
    json(&out);
    p
}

#[test]
fn generated_terrain_checks_out() {
    let dir = TempDir::new().unwrap();
    let t = gen(&dir, "t.json", "5", "10", "20");
    // without --out the terrain is written to stdout and the report to stderr
    let piped = wobble(&["gen-terrain", "--seed", "5", "--theta", "10", "--bumps", "20"]);
    assert_eq!(piped.stdout, fs::read(&t).unwrap());
    let gen_report: Value = serde_json::from_slice(&piped.stderr).unwrap();
    let check = json(&wobble(&["check", "--terrain", s(&t)]));
    let slope = check["slope"]["slope_bound_deg"].as_f64().unwrap();
    assert!(slope <= 10.0 && slope > 9.99, "{slope}");
    assert_eq!(check["slope"], gen_report["slope"]);
    assert_eq!(check["motion_gamma_certified"], true);
}

#[test]
fn zero_bumps_or_zero_theta_is_flat() {
    let dir = TempDir::new().unwrap();
    for (theta, bumps) in [("10", "0"), ("0", "20")] {
        let t = gen(&dir, "flat.json", "3", theta, bumps);
        let check = json(&wobble(&["check", "--terrain", s(&t)]));
        assert_eq!(check["slope"]["slope_bound_deg"].as_f64(), Some(0.0));
    }
}

#[test]
fn flat_ground_needs_no_motion() {
    let dir = TempDir::new().unwrap();
    let t = gen(&dir, "flat.json", "1", "0", "0");
    let trace = path(&dir, "trace.csv");
    for motion in ["gamma", "rt"] {
        let r = json(&wobble(&["solve", "--terrain", s(&t), "--side", "1", "--motion", motion, "--out", s(&trace)]));
        assert_eq!(r["found"], true);
        assert_eq!(r["sweep_deg"].as_f64(), Some(0.0));
    }
}

#[test]
fn trace_has_one_row_per_sample() {
    let dir = TempDir::new().unwrap();
    let t = gen(&dir, "t.json", "11", "8", "20");
    let trace = path(&dir, "trace.csv");
    let r = json(&wobble(&["solve", "--terrain", s(&t), "--side", "1", "--out", s(&trace)]));
    assert_eq!(r["found"], true);
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("param_deg,x1,"));
    assert_eq!(text.lines().count() as u64, r["samples"].as_u64().unwrap() + 1);
}

#[test]
fn steep_terrain_is_refused_without_override() {
    let dir = TempDir::new().unwrap();
    let t = gen(&dir, "steep.json", "2", "20", "20");
    let trace = path(&dir, "trace.csv");
    let out = wobble(&["solve", "--terrain", s(&t), "--side", "1", "--out", s(&trace)]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("14.47"), "{err}");
}

#[test]
fn usage_errors() {
    assert_eq!(wobble(&["montecarlo", "--n", "0"]).status.code(), Some(64));
    assert_eq!(wobble(&["solve"]).status.code(), Some(64));
    assert_eq!(wobble(&["--help"]).status.code(), Some(0));
    assert_eq!(wobble(&["check", "--terrain", "/nonexistent/t.json"]).status.code(), Some(4));
    let dir = TempDir::new().unwrap();
    let t = gen(&dir, "t.json", "1", "5", "5");
    let bad = wobble(&["solve", "--terrain", s(&t), "--circle", "1", "--angles", "0,90,180"]);
    assert_eq!(bad.status.code(), Some(64));
}

#[test]
fn malformed_terrain_exits_4() {
    let dir = TempDir::new().unwrap();
    let p = path(&dir, "bad.json");
    fs::write(&p, "{\"type\": \"bumps\",\n \"bumps\": 7}").unwrap();
    let out = wobble(&["check", "--terrain", s(&p)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = TempDir::new().unwrap();
    let out = wobble(&["gen-terrain", "--out", s(&path(&dir, "missing/dir/t.json"))]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn montecarlo_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.csv"), path(&dir, "b.csv"));
    let ra = json(&wobble(&["montecarlo", "--n", "3", "--seed", "9", "--motion", "rt", "--out", s(&a)]));
    json(&wobble(&["montecarlo", "--n", "3", "--seed", "9", "--motion", "rt", "--out", s(&b)]));
    assert_eq!(ra["found"].as_u64(), Some(3));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), 4);
}

#[test]
fn scan_reports_balance_angles() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "scan.csv");
    let flat = gen(&dir, "flat.json", "1", "0", "0");
    let r = json(&wobble(&["scan", "--terrain", s(&flat), "--side", "1", "--out", s(&csv)]));
    assert_eq!(r["degenerate"], true);

    let t = gen(&dir, "t.json", "4", "6", "20");
    let r = json(&wobble(&["scan", "--terrain", s(&t), "--side", "1", "--samples", "1024", "--out", s(&csv)]));
    assert_eq!(r["degenerate"], false);
    assert_eq!(r["root_count"].as_u64().unwrap() % 2, 0);
    assert!(r["integral_residual"].as_f64().unwrap() < 1e-12);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 1025);

    let r = json(&wobble(&[
        "scan", "--terrain", s(&t), "--circle", "1", "--angles", "0,60,120,180", "--samples", "512", "--out", s(&csv),
    ]));
    assert!((r["alpha"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((r["beta"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
}
