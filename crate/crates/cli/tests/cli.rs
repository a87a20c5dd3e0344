use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trace-lab"))
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn fractal_rect_counts() {
    let dir = tempfile::tempdir().unwrap();
    for (depth, count) in [("0", 3), ("2", 17)] {
        let o = run(
            &["fractal", "--example", "ex1", "--depth", depth],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let d = json(&dir.path().join("domain.json"));
        assert_eq!(d["rects"].as_array().unwrap().len(), count);
        assert_eq!(d["D"].as_array().unwrap().len(), 1);
    }
}

#[test]
fn zero_function_gives_zero_averages() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["fractal", "--depth", "3"], dir.path())
        .status
        .success());
    let dom = dir.path().join("domain.json");
    let o = run(
        &[
            "trace",
            "--domain",
            dom.to_str().unwrap(),
            "--function",
            r#"{"kind":"constant","value":0}"#,
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("trace_averages.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,value,err"));
    for l in lines {
        let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(v[1], 0.0);
    }
    let verdict = json(&dir.path().join("trace_verdict.json"));
    assert_eq!(verdict["exact_zero"], Value::Bool(true));
}

#[test]
fn example1_trace_floor_and_domain_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["fractal", "--depth", "8"], dir.path())
        .status
        .success());
    let dom = dir.path().join("domain.json");
    let cfg = write(
        dir.path(),
        "trace.json",
        &format!(
            r#"{{"domain": {:?}, "x": [0.25, 0.0], "floor": 0.009947}}"#,
            dom.to_str().unwrap()
        ),
    );
    let o = run(&["trace", "--config", &cfg], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let rep = json(&dir.path().join("trace.json"));
    assert_eq!(rep["passed"], Value::Bool(true));
    assert!(rep["scalars"][0]["value"].as_f64().unwrap() > 0.009947);
}

#[test]
fn malformed_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        "{\n  \"p\": 2.0,\n  \"h\": oops\n}\n",
    );
    let o = run(&["capacity", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn unknown_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"pp": 2.0}"#);
    let o = run(&["capacity", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_prints_usage() {
    let o = bin().arg("frobnicate").output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn capacity_json_is_thread_independent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = write(
        a.path(),
        "cap.json",
        r#"{"points": [[0,0],[0.5,0],[0,0.5]], "h": 0.125}"#,
    );
    assert!(
        run(&["capacity", "--config", &cfg, "--threads", "1"], a.path())
            .status
            .success()
    );
    assert!(
        run(&["capacity", "--config", &cfg, "--threads", "3"], b.path())
            .status
            .success()
    );
    let x = std::fs::read(a.path().join("capacity.json")).unwrap();
    let y = std::fs::read(b.path().join("capacity.json")).unwrap();
    assert_eq!(x, y);
}

#[test]
fn cell_budget_variable_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["trace", "--tol", "1e-9", "--out"])
        .arg(dir.path())
        .env("TRACE_LAB_CELL_BUDGET", "16")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("precision"));
    let o = bin()
        .arg("trace")
        .arg("--out")
        .arg(dir.path())
        .env("TRACE_LAB_CELL_BUDGET", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn hardy_finite_on_shallow_fractal_and_divergent_when_touching() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["hardy"], dir.path());
    assert!(o.status.success());
    let rep = json(&dir.path().join("hardy.json"));
    assert!(rep["scalars"][0]["value"].as_f64().unwrap() > 0.0);

    let dom = write(
        dir.path(),
        "square.json",
        r#"{"rects": [{"lo": [0, 0], "size": [1, 1]}], "D": [{"a": [0, 0], "b": [1, 0]}]}"#,
    );
    let o = run(&["hardy", "--domain", &dom], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL finite"));
}

#[test]
fn membership_constant_on_square_is_floored() {
    let dir = tempfile::tempdir().unwrap();
    let dom = write(
        dir.path(),
        "square.json",
        r#"{"rects": [{"lo": [0, 0], "size": [1, 1]}], "D": [{"a": [0, 0], "b": [1, 0]}]}"#,
    );
    let cfg = write(
        dir.path(),
        "m.json",
        &format!(r#"{{"domain": {dom:?}, "expect": "floored"}}"#),
    );
    let o = run(&["membership", "--config", &cfg], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(dir.path().join("membership_sweep.csv").exists());
}

#[test]
fn reproduce_slice_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["reproduce", "slice"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    for f in ["slice.json", "slice_averages.csv", "slice_capacity.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn reproduce_examples_without_membership_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "nomem.json", r#"{"membership": null}"#);
    for ex in ["ex1", "ex2"] {
        let o = run(&["reproduce", ex, "--config", &cfg], dir.path());
        assert!(
            o.status.success(),
            "{ex}: {}",
            String::from_utf8_lossy(&o.stdout)
        );
        let rep = json(&dir.path().join(format!("example{}.json", &ex[2..])));
        assert_eq!(rep["passed"], Value::Bool(true));
    }
}
