use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rasc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rasc")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_writes_artifacts_that_validate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rasc(
        &["solve", "--gamma", "3.0", "--flows", "3", "--problem", "p1", "--seed", "7", "--out", "run"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["status"], "Optimal");
    assert_eq!(json["paths"].as_array().unwrap().len(), 3);
    for f in ["scenario.json", "model.json", "model.lp", "solution.json", "solution.csv"] {
        assert!(tmp.path().join("run").join(f).is_file(), "{f}");
    }
    let ok = rasc(&["validate", "--model", "run/model.json", "--solution", "run/solution.json"], tmp.path());
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).starts_with("valid"));
}

#[test]
fn corrupted_solution_fails_validation_naming_the_row() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rasc(&["solve", "--flows", "1", "--seed", "3", "--out", "run"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let path = tmp.path().join("run/solution.json");
    let mut sol: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let values = sol["assignment"].as_array_mut().unwrap();
    let i = values.iter().position(|v| v.as_f64() == Some(1.0)).unwrap();
    values[i] = serde_json::json!(0.0);
    fs::write(tmp.path().join("bad.json"), sol.to_string()).unwrap();
    let bad = rasc(&["validate", "--model", "run/model.json", "--solution", "bad.json"], tmp.path());
    assert_eq!(bad.status.code(), Some(5));
    let err = String::from_utf8_lossy(&bad.stderr);
    assert!(err.contains("src_0"), "{err}");
}

#[test]
fn p2_reports_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rasc(&["solve", "--problem", "p2", "--flows", "2", "--format", "csv"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("record,flow,step"));
    assert!(text.lines().any(|l| l.starts_with("rasc,") && !l.ends_with(",,,,")));
}

#[test]
fn infeasible_instance_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rasc(&["solve", "--gamma", "5.0", "--flows", "1"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_config_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.toml"), "[sweep]\ntrials = 0\n").unwrap();
    let out = rasc(&["--config", "bad.toml", "sweep"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trials"));
    let missing = rasc(&["--config", "nope.toml", "baseline"], tmp.path());
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn generate_and_solve_from_file() {
    let tmp = tempfile::tempdir().unwrap();
    let gen = rasc(&["generate", "--flows", "2", "--seed", "9", "--out", "s.json"], tmp.path());
    assert_eq!(gen.status.code(), Some(0));
    let a = rasc(&["solve", "--scenario", "s.json"], tmp.path());
    let b = rasc(&["solve", "--flows", "2", "--seed", "9"], tmp.path());
    let objective =
        |o: &Output| serde_json::from_str::<serde_json::Value>(&stdout(o)).unwrap()["objective"].clone();
    assert_eq!(objective(&a), objective(&b));
}

#[test]
fn baseline_prints_count_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rasc(&["baseline", "--format", "csv"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("gamma,fsc_count"));
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn sweep_is_reproducible_from_the_command_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "[sweep]\ngammas = [3.0]\nn_e = [1, 2]\ntrials = 2\n";
    fs::write(tmp.path().join("c.toml"), cfg).unwrap();
    for dir in ["a", "b"] {
        let out = rasc(&["--config", "c.toml", "sweep", "--seed", "42", "--out", dir], tmp.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(tmp.path().join("a/trials.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/trials.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 5);
}
