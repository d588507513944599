//! End-to-end checks of the `travelwave` binary: exit codes, output files,
//! reproducibility and the sweep/diagnose/selftest subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_travelwave");

const CLASSICAL: &str = r#"
[model]
kind = "boussinesq"
family = "classical"
speed = 1.3

[grid]
half_length = 32.0
points = 256

[accel]
kind = "vem"
method = "mpe"
kappa = 5

[stopping]
tol = 1e-12
max_iters = 200
timing = false
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], out_dir: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .env("TRAVELWAVE_OUTPUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn converged_solve_exits_zero_and_writes_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", CLASSICAL);
    let out = tmp.path().join("out");
    let o = run(&["solve", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert_eq!(s["reason"], "converged");
    assert_eq!(s["method"], "mpe");
    assert_eq!(s["width"], 5);
    let keys: Vec<&String> = s.as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 7);
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,res,diff,sfe,seconds\n"));
    assert!(!trace.contains('\r'));
    assert!(fs::read_to_string(out.join("profile.csv"))
        .unwrap()
        .starts_with("x,u0,u1\n"));
}

#[test]
fn zero_iteration_budget_reports_max_iters() {
    let tmp = TempDir::new().unwrap();
    let text = CLASSICAL.replace("max_iters = 200", "max_iters = 0");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let out = tmp.path().join("out");
    let o = run(&["solve", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    let s = summary(&out);
    assert_eq!(s["iterations"], 0);
    assert_eq!(s["reason"], "max_iters");
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2);
}

#[test]
fn invalid_configuration_exits_one() {
    let tmp = TempDir::new().unwrap();
    let text = CLASSICAL.replace("points = 256", "points = 100");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let o = run(&["solve", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    let cfg = write_config(
        tmp.path(),
        "d.toml",
        &CLASSICAL.replace("[stopping]", "[stopping]\nbogus = 1"),
    );
    assert_eq!(
        run(&["solve", cfg.to_str().unwrap()], tmp.path()).status.code(),
        Some(1)
    );
    assert_eq!(run(&["solve", "/nonexistent.toml"], tmp.path()).status.code(), Some(1));
}

#[test]
fn identical_configs_give_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", CLASSICAL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let oa = run(&["solve", cfg.to_str().unwrap()], &a);
    let ob = run(&["solve", cfg.to_str().unwrap()], &b);
    assert_eq!(oa.stdout, ob.stdout);
    for name in ["trace.csv", "profile.csv", "summary.json"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn gnls_sweep_emits_one_row_per_width() {
    let tmp = TempDir::new().unwrap();
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/gnls.toml");
    let out = tmp.path().join("out");
    let o = run(&["sweep", root.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    for (row, kappa) in rows.iter().zip(2..) {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[0], "mpe");
        assert_eq!(f[1], kappa.to_string());
        assert_eq!(f[4], "converged");
    }
    assert_eq!(fs::read_to_string(out.join("sweep.csv")).unwrap(), csv);
}

#[test]
fn diagnose_reports_both_spectra() {
    let tmp = TempDir::new().unwrap();
    let text = format!("{CLASSICAL}\n[diagnose]\ncount = 3\n");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let out = tmp.path().join("out");
    assert_eq!(run(&["solve", cfg.to_str().unwrap()], &out).status.code(), Some(0));
    let profile = out.join("profile.csv");
    let o = run(&["diagnose", cfg.to_str().unwrap(), profile.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "k,s_re,s_im,f_re,f_im");
    assert_eq!(lines.len(), 4);
    let first: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert!((first[1] - 2.0).abs() < 1e-3, "S leads with the homogeneity eigenvalue");
    assert!(
        (first[3] - 1.0).abs() < 1e-3,
        "F' leads with the translation eigenvalue"
    );
    assert!(out.join("spectrum.json").exists());

    let wrong = write_config(tmp.path(), "w.toml", &CLASSICAL.replace("points = 256", "points = 128"));
    let o = run(&["diagnose", wrong.to_str().unwrap(), profile.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn selftest_passes() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["selftest", "--seed", "3"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() >= 8);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
