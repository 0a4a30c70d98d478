use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn obisect(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obisect")).args(args).current_dir(cwd).output().expect("spawn obisect")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.cfg");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_identical_csv_twice() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "D = 4\nd = 2\nT = 20000\nseed = 9\n");
    for name in ["a.csv", "b.csv"] {
        let out = obisect(&["run", "--config", &cfg, "--out", name, "--quiet"], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
    }
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,error,avg_error_so_far,phase,side_length,oracle_called,matched_dim");
    assert_eq!(text.lines().count(), 20_001);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "T = 5000\nseed = 1\n");
    obisect(&["run", "--config", &cfg, "--out", "one.csv", "--quiet"], dir.path());
    obisect(&["run", "--config", &cfg, "--seed", "2", "--out", "two.csv", "--quiet"], dir.path());
    assert_ne!(fs::read(dir.path().join("one.csv")).unwrap(), fs::read(dir.path().join("two.csv")).unwrap());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "D = 4\nbogus = 1\n");
    let out = obisect(&["run", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let cfg = write_config(dir.path(), "D = 2\nd = 3\n");
    assert_eq!(obisect(&["batch", "--config", &cfg], dir.path()).status.code(), Some(2));
}

#[test]
fn scaling_needs_three_horizons() {
    let dir = tempfile::tempdir().unwrap();
    let out = obisect(&["scaling", "--t-list", "100,1000"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = obisect(&["scaling", "--t-list", "1000,3000,9000"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("slope="));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = obisect(&["run", "--out", "missing/dir/run.csv"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn batch_reports_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "T = 1000\neval_M = 100\n");
    let out = obisect(&["batch", "--config", &cfg], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("converged=false"), "{text}");
    assert!(text.contains("eval_oracle_calls=0"), "{text}");
}

#[test]
fn verify_lemmas_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = obisect(&["verify-lemmas"], dir.path());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(!text.contains("FAIL"));
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() > 12 + 24 + 36);
}
