use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn iup(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iup")).current_dir(dir).args(args).output().expect("spawn iup")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn partition_counts_atoms() {
    let dir = tempfile::tempdir().unwrap();
    for (d, n) in [(1, 2), (2, 6), (3, 26)] {
        let out = format!("atoms{d}.json");
        let o = iup(dir.path(), &["partition", "--dim", &d.to_string(), "--out", &out]);
        assert_eq!(code(&o), 0);
        assert_eq!(stdout(&o).trim(), format!("{n} atoms"));
        let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(&out)).unwrap()).unwrap();
        assert_eq!(v["atoms"].as_array().unwrap().len(), n);
        assert!(dir.path().join(format!("{out}.manifest.json")).exists());
    }
}

#[test]
fn partition_from_rho() {
    let dir = tempfile::tempdir().unwrap();
    let o = iup(dir.path(), &["--format", "json", "partition", "--rho", "1/4,1/4,1/2"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["atoms"], 6);
}

#[test]
fn bad_arguments_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&iup(dir.path(), &["simulate", "--steps", "0"])), 1);
    assert_eq!(code(&iup(dir.path(), &["simulate", "--eps", "3/2"])), 1);
    assert_eq!(code(&iup(dir.path(), &["simulate", "--seed", "1/2"])), 1);
    assert_eq!(code(&iup(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&iup(dir.path(), &["--help"])), 0);
}

#[test]
fn random_seed_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["a.csv", "b.csv"] {
        let o = iup(dir.path(), &["simulate", "--seed", "random:7", "--steps", "500", "--out", f]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 501);
}

#[test]
fn catalog_verify_pipe() {
    let dir = tempfile::tempdir().unwrap();
    let o = iup(dir.path(), &["catalog", "--which", "ma", "--out", "ma.json"]);
    assert_eq!(code(&o), 0);
    let o = iup(dir.path(), &["--format", "json", "verify", "--candidate-bundle", "ma.json", "--report", "rep.json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["asiup"], true);

    let o = iup(dir.path(), &["catalog", "--which", "ma", "--params", r#"{"eps":"41/100"}"#, "--out", "bad.json"]);
    assert_eq!(code(&o), 0);
    let o = iup(dir.path(), &["verify", "--candidate-bundle", "bad.json"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn catalog_to_stdout_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    for which in ["m1m2", "p4"] {
        let o = iup(dir.path(), &["catalog", "--which", which]);
        assert_eq!(code(&o), 0);
        let path = dir.path().join(format!("{which}.json"));
        std::fs::write(&path, &o.stdout).unwrap();
        let o = iup(dir.path(), &["verify", "--candidate-bundle", path.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{which}: {}", stdout(&o));
    }
}

#[test]
fn infeasible_delta_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = iup(dir.path(), &["catalog", "--which", "m1m2", "--params", r#"{"eps":"2/5","delta":["1/2",0,0,0,0]}"#]);
    assert_eq!(code(&o), 1);
}

#[test]
fn simulate_extract_verify() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let o = iup(dir.path(), args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        o
    };
    run(&["partition", "--dim", "2", "--out", "atoms.json"]);
    run(&["simulate", "--eps", "43/100", "--seed", "1/4,2/5", "--out", "orbit.csv"]);
    let o = run(&[
        "extract", "--orbit", "orbit.csv", "--atoms", "atoms.json", "--symmetries", "sigma_321", "--out", "problem.json",
    ]);
    assert!(stdout(&o).contains("1 after folding"));
    run(&["catalog", "--which", "ma", "--out", "ma.json"]);
    run(&["verify", "--candidate-bundle", "ma.json", "--problem", "problem.json"]);
}

#[test]
fn extract_without_structure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("x1,x2,atom\n");
    // gaps shrink steadily, so no single scale separates clusters
    let mut x = 0.05;
    for i in 0..400 {
        csv.push_str(&format!("{x:.9},0.5,000\n"));
        x += 0.9 * (400 - i) as f64 / 80200.0;
    }
    std::fs::write(dir.path().join("flat.csv"), csv).unwrap();
    let o = iup(dir.path(), &["extract", "--orbit", "flat.csv"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn threshold_brackets_ma() {
    let dir = tempfile::tempdir().unwrap();
    let o = iup(
        dir.path(),
        &["--jobs", "2", "--format", "json", "threshold", "--family", "ma", "--tol", "1/10000", "--grid", "4", "--out", "sweep.csv"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let t = (4.0 - 10f64.sqrt()) / 2.0;
    assert!(v["lo_f64"].as_f64().unwrap() <= t && t <= v["hi_f64"].as_f64().unwrap());
    let sweep = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(sweep.starts_with("source,parameter,parameter_f64,pass,min_margin"));
    assert!(sweep.lines().filter(|l| l.starts_with("grid")).count() == 5);
}

#[test]
fn manifest_dir_collects_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let o = iup(dir.path(), &["--manifest-dir", "runs", "partition", "--dim", "2", "--out", "atoms.json"]);
    assert_eq!(code(&o), 0);
    let m: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("runs/atoms.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["subcommand"]["partition"]["dim"], 2);
    assert_eq!(m["exit_code"], 0);
}
