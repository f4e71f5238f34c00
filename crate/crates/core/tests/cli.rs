use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn twospin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twospin"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const ISOTROPIC: &str = "[model]\na = [\"1/2\"]\nb = [\"1/2\"]\n";

#[test]
fn spectrum_of_smallest_cluster() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", ISOTROPIC);
    let out = twospin(&["spectrum", "--config", "c.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("index,sector,eigenvalue"));
    let mut values: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    values.sort_by(f64::total_cmp);
    let expected = [-1.5, 0.5, 0.5, 0.5];
    assert!(values.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12));
    let summary = json(&dir.path().join("o/spectrum.json"));
    assert_eq!(summary["trace_check"]["passed"], Value::Bool(true));
}

#[test]
fn verify_passes_and_flags_broken_constraint() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "good.toml", ISOTROPIC);
    let out = twospin(&["verify", "--config", "good.toml", "--out", "g"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report = json(&dir.path().join("g/verify.json"));
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == Value::Bool(true)));

    write(dir.path(), "bad.toml", &format!("{ISOTROPIC}alpha_a = [1.3]\n"));
    let out = twospin(&["verify", "--config", "bad.toml", "--out", "b"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let report = json(&dir.path().join("b/verify.json"));
    let rll = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "rll_a").unwrap();
    assert_eq!(rll["passed"], Value::Bool(false));
}

#[test]
fn bethe_reports_singular_root_and_empty_sector() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", ISOTROPIC);
    let out = twospin(&["bethe", "--config", "c.toml", "--out", "o", "--nmax", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty sector"));
    let report = json(&dir.path().join("o/bethe.json"));
    let levels = report["levels"].as_array().unwrap();
    let one = levels.iter().find(|l| l["n"] == 1).unwrap();
    assert!((one["energy"].as_f64().unwrap() + 1.5).abs() < 1e-9);
    assert_eq!(one["roots"]["singular"][0], Value::Bool(true));
}

#[test]
fn bethe_covers_every_requested_sector() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", "[model]\na = [\"1/2\", \"1/2\"]\nb = [\"1/2\"]\n");
    let out = twospin(&["bethe", "--config", "c.toml", "--out", "o", "--nmax", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report = json(&dir.path().join("o/bethe.json"));
    let ns: Vec<u64> = report["runs"].as_array().unwrap().iter().map(|r| r["n"].as_u64().unwrap()).collect();
    assert_eq!(ns, vec![0, 1, 2]);
}

#[test]
fn graph_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", "[model]\na = [\"1/2\", \"1/2\", \"1/2\", \"1/2\"]\nb = [\"1/2\", \"1/2\", \"1/2\", \"1/2\"]\n");
    let out = twospin(&["graph", "--config", "c.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let dot = std::fs::read_to_string(dir.path().join("o/graph.dot")).unwrap();
    assert!(dot.starts_with("graph spin_cluster {"));
    assert_eq!(dot.matches(" -- ").count(), 16);

    let out = twospin(&["fit", "--config", "c.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&dir.path().join("o/fit.json"))["status"], "feasible");
}

#[test]
fn non_uniform_couplings_are_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", "[model]\na = [\"1/2\"]\nb = [\"1/2\", \"1/2\"]\n");
    let couplings = r#"{"bz_a":[-0.0],"bz_b":[0.0,0.0],"d_a":[0.0],"d_b":[0.0,0.0],
        "jz_aa":[[0.0]],"jz_bb":[[0.0,0.0],[0.0,0.0]],"jz_ab":[[2.0,2.0]],"jxy_ab":[[2.0,3.0]]}"#;
    write(dir.path(), "cs.json", couplings);
    for verb in ["fit", "spectrum"] {
        let out = twospin(&[verb, "--config", "c.toml", "--out", "o", "--from-couplings", "cs.json"], dir.path());
        assert_eq!(out.status.code(), Some(1), "{verb}");
    }
    assert_eq!(json(&dir.path().join("o/fit.json"))["status"], "infeasible");
}

#[test]
fn usage_and_parse_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(twospin(&["spectrum"], dir.path()).status.code(), Some(2));
    assert_eq!(twospin(&["frobnicate", "--config", "x.toml"], dir.path()).status.code(), Some(2));
    write(dir.path(), "bad.toml", "[model]\na = [\"1/3\"]\nb = [\"1/2\"]\n");
    assert_eq!(twospin(&["spectrum", "--config", "bad.toml"], dir.path()).status.code(), Some(2));
    assert_eq!(twospin(&["spectrum", "--config", "missing.toml"], dir.path()).status.code(), Some(2));
}

#[test]
fn capacity_exceeded_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", "[model]\na = [\"1/2\", \"1/2\", \"1/2\"]\nb = [\"1/2\"]\ndim_cap = 8\n");
    let out = twospin(&["spectrum", "--config", "c.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", "[model]\na = [\"1/2\", \"1\"]\nb = [\"1/2\"]\ngamma_a = 1.2\ngamma_b = 1.2\nomega_a = 0.3\nxi1 = 0.2\n");
    let mut reports = Vec::new();
    for threads in ["1", "4"] {
        let out = Command::new(env!("CARGO_BIN_EXE_twospin"))
            .args(["bethe", "--config", "c.toml", "--out", threads])
            .env("TWOSPIN_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        reports.push(std::fs::read_to_string(dir.path().join(threads).join("bethe.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}
