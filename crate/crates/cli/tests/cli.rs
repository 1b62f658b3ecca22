use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lab")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, cfg.to_string()).unwrap();
    path
}

fn run(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    lab(&args)
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn gauge_config(s: f64) -> Value {
    json!({
        "scenario": "gauge",
        "grid_ladder": [33, 65],
        "seed": 7,
        "gauge": {"s": s, "profile": {"kind": "y_bump", "lo": 0.1, "hi": 0.9}}
    })
}

#[test]
fn identical_relations_exit_zero_with_zero_residuals() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "r.json", &json!({"scenario": "relations", "grid_ladder": [17, 33], "seed": 2}));
    let out = tmp.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = report(&out);
    assert_eq!(rep["schema"], 1);
    assert_eq!(rep["scenario"], "relations");
    let csv = std::fs::read_to_string(out.join("relations.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert!(cells[1..].iter().all(|c| c.parse::<f64>().unwrap() == 0.0), "{line}");
    }
}

#[test]
fn gauge_scenario_passes_on_a_small_ladder() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "g.json", &gauge_config(1.0));
    let out = tmp.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")), "{stdout}");
    assert!(out.join("gauge.csv").exists());
}

#[test]
fn failing_criterion_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "g.json", &gauge_config(1e-3));
    let out = tmp.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stdout).unwrap().contains("FAIL coefficient_gap"));
    let rep = report(&out);
    let gap = rep["criteria"].as_array().unwrap().iter().find(|c| c["name"] == "coefficient_gap").unwrap();
    assert_eq!(gap["pass"], false);
}

#[test]
fn weight_overflow_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &json!({"scenario": "cgo", "grid_ladder": [17], "tau_ladder": [1e5], "seed": 1}),
    );
    let o = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("overflow"));
}

#[test]
fn input_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let empty_tau = write_config(
        tmp.path(),
        "t.json",
        &json!({"scenario": "cgo", "grid_ladder": [17], "tau_ladder": [], "seed": 1}),
    );
    assert_eq!(run(&empty_tau, &out, &[]).status.code(), Some(2));
    let unknown = write_config(
        tmp.path(),
        "u.json",
        &json!({"scenario": "relations", "grid_ladder": [17], "colour": "blue"}),
    );
    assert_eq!(run(&unknown, &out, &[]).status.code(), Some(2));
    let malformed = tmp.path().join("m.json");
    std::fs::write(&malformed, "{\"scenario\": \"cgo\", ").unwrap();
    assert_eq!(run(&malformed, &out, &[]).status.code(), Some(2));
    assert_eq!(run(&tmp.path().join("missing.json"), &out, &[]).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "r.json", &json!({"scenario": "relations", "grid_ladder": [17], "seed": 2}));
    let out = tmp.path().join("out");
    assert_eq!(run(&cfg, &out, &["--seed", "41"]).status.code(), Some(0));
    assert_eq!(report(&out)["inputs"]["seed"], 41);
}

#[test]
fn reruns_are_byte_identical_across_job_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "r.json",
        &json!({"scenario": "relations", "grid_ladder": [65, 129, 257], "seed": 3, "n_sys": 2, "pair": "gauge"}),
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(run(&cfg, &a, &["--jobs", "1"]).status.code(), Some(0));
    assert_eq!(run(&cfg, &b, &["--jobs", "3"]).status.code(), Some(0));
    for f in ["report.json", "relations.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn fit_command_reports_the_slope() {
    let tmp = tempfile::tempdir().unwrap();
    let table = tmp.path().join("t.csv");
    std::fs::write(&table, "tau,nx,residual\n8,33,0.125\n16,33,0.0625\n32,33,0.03125\n8,65,1\n16,65,1\n32,65,1\n").unwrap();
    let t = table.to_str().unwrap();
    let o = lab(&["fit", t, "--x", "tau", "--y", "res", "--filter", "nx=33"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let fit: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((fit["slope"].as_f64().unwrap() + 1.0).abs() < 1e-12);
    assert_eq!(lab(&["fit", t, "--x", "tau", "--y", "nope"]).status.code(), Some(2));
    assert_eq!(lab(&["fit", t, "--x", "tau", "--y", "residual", "--filter", "nx"]).status.code(), Some(2));
    std::fs::write(&table, "tau,residual\n8,0.1\n16,0\n32,0.01\n").unwrap();
    assert_eq!(lab(&["fit", t, "--x", "tau", "--y", "residual"]).status.code(), Some(1));
}
