use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fsistab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsistab")).args(args).current_dir(dir).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stdout_value(out: &Output, key: &str) -> f64 {
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text.lines().find(|l| l.starts_with(&format!("{key} "))).unwrap_or_else(|| panic!("{key} in {text}"));
    line.split_whitespace().nth(1).unwrap().parse().unwrap()
}

#[test]
fn nullspace_defaults_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = fsistab(&["nullspace", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_value(&out, "residual") <= 1e-10);
    assert!(dir.path().join("o/nullspace.csv").exists());
}

#[test]
fn simulate_from_null_vector_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "nx = 8\nny = 8\ninit = n0\nT = 1\n");
    let out = fsistab(&["simulate", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("o/energy.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config L1=1 L2=1 nx=8 ny=8"));
    assert_eq!(lines.next().unwrap(), "t,E,D,Sdiv,Skappa,Q,balance_residual");
    let energies: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(energies.len(), 17);
    assert!(energies.iter().all(|e| (e - energies[0]).abs() <= 1e-10));
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = fsistab(&["selftest"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().count() >= 10 && !text.contains("FAIL"));
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "kappa = 2\n");
    let out = fsistab(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa"));
    assert_eq!(fsistab(&["explode"], dir.path()).status.code(), Some(1));
    assert_eq!(fsistab(&["simulate", "--config", "missing.cfg"], dir.path()).status.code(), Some(1));
}

#[test]
fn numerical_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "eig_cap = 10\n");
    let out = fsistab(&["spectrum", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

#[test]
fn identical_runs_are_byte_identical_and_seed_matters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "nx = 8\nny = 8\nstride = 1000\n");
    let run = |out: &str, seed: &str| {
        let o = fsistab(&["decay", "--config", &cfg, "--out", out, "--seed", seed], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (
            fs::read(dir.path().join(out).join("energy.csv")).unwrap(),
            fs::read(dir.path().join(out).join("decay.csv")).unwrap(),
        )
    };
    let a = run("a", "5");
    assert_eq!(a, run("b", "5"));
    assert_ne!(a.0, run("c", "6").0);
}
