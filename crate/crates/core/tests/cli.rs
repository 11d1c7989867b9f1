use std::path::Path;
use std::process::{Command, Output};

fn qprog(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qprog"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = qprog(
        dir.path(),
        &["run", "--p-max", "0.2", "--horizon", "150", "--eta", "0.01", "--seed", "7", "--out", "r.csv"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(text.lines().count(), 151);
}

#[test]
fn unknown_flag_prints_usage_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = qprog(dir.path(), &["run", "--frobnicate", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn invalid_values_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run", "--eta", "-1"][..],
        &["run", "--p-max", "0.1"],
        &["run", "--loss", "diamond"],
        &["run", "--ref-iters", "0"],
        &["run", "--config", "missing.cfg"],
        &["sweep", "--t-stride", "0"],
    ] {
        let out = qprog(dir.path(), args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qprog(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(qprog(dir.path(), &["sweep", "--help"]).status.code(), Some(0));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.cfg"),
        "# small run\nloss = trace\np-max = 0.6\nhorizon = 12\nseed = 3\nout = from_file.csv\n",
    )
    .unwrap();
    let out = qprog(dir.path(), &["run", "--config", "exp.cfg", "--horizon", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("from_file.csv")).unwrap();
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn sweep_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["sweep", "--horizon", "12", "--seeds", "2", "--t-stride", "3", "--ref-iters", "20"];
    let mut a: Vec<&str> = base.to_vec();
    a.extend(["--jobs", "1", "--out", "a"]);
    let mut b: Vec<&str> = base.to_vec();
    b.extend(["--jobs", "4", "--out", "b"]);
    assert_eq!(qprog(dir.path(), &a).status.code(), Some(0));
    assert_eq!(qprog(dir.path(), &b).status.code(), Some(0));
    let mut names: Vec<_> = std::fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 4 * 2 + 3);
    for name in names {
        let x = std::fs::read(dir.path().join("a").join(&name)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(&name)).unwrap();
        assert_eq!(x, y, "{name:?}");
    }
    let svg = std::fs::read_to_string(dir.path().join("a/normalized_regret.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);
}

#[test]
fn certify_passes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = qprog(
        dir.path(),
        &["certify", "--horizon", "30", "--seeds", "2", "--instances", "5", "--trials", "50"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS regret_bound"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn reference_writes_program() {
    let dir = tempfile::tempdir().unwrap();
    let out = qprog(dir.path(), &["reference", "--p-max", "0.2", "--horizon", "10", "--out", "pi.txt"]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("pi.txt")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.split(',').count() == 8));
}
