use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tierbid_core::harness::{ExperimentPlan, SweepVariable};

fn tierbid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tierbid")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = tierbid(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn generate(dir: &Path, files: usize, scenarios: usize) -> String {
    let path = dir.join("instance.json");
    let p = path.to_str().unwrap().to_string();
    ok(&[
        "generate",
        "--files",
        &files.to_string(),
        "--scenarios",
        &scenarios.to_string(),
        "--seed",
        "3",
        "--out",
        &p,
    ]);
    p
}

#[test]
fn generate_then_solve_with_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), 12, 2);
    let set: serde_json::Value = serde_json::from_str(&fs::read_to_string(&inst).unwrap()).unwrap();
    assert_eq!(set["files"].as_array().unwrap().len(), 12);
    assert_eq!(set["scenarios"].as_array().unwrap().len(), 2);

    for method in ["pm", "is", "gh1", "gh2"] {
        let out = ok(&["solve", "--instance", &inst, "--method", method, "--seed", "1"]);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["method"], method);
        assert!(v["expected_profit"].as_f64().unwrap().is_finite());
        assert_eq!(v["plan"].as_array().unwrap().len(), 2);
    }

    let csv = ok(&["solve", "--instance", &inst, "--format", "csv"]);
    assert!(csv.starts_with("file,size_mb,"));
    assert_eq!(csv.lines().count(), 1 + 12 * 2);
}

#[test]
fn solve_reads_system_settings_from_toml() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), 8, 1);
    let cfg = dir.path().join("solve.toml");
    fs::write(&cfg, "[system]\ncold_capacity_mb = 1.0\n\n[solver]\nmultistarts = 1\n").unwrap();
    let out = ok(&["solve", "--instance", &inst, "--config", cfg.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    // nothing fits in 1 MB
    assert!(v["stage_one"]["accept"].as_array().unwrap().iter().all(|a| a == false));
    assert_eq!(v["expected_profit"].as_f64().unwrap(), 0.0);
}

#[test]
fn oracle_solves_tiny_instances_and_refuses_large_ones() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), 3, 2);
    let out = ok(&["oracle", "--instance", &inst, "--grid", "8"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["profit"].as_f64().unwrap() >= 0.0);

    let big = generate(dir.path(), 10, 2);
    let out = tierbid(&["oracle", "--instance", &big]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("oracle"));
}

#[test]
fn plan_round_trips_and_drives_a_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&["plan", "--preset", "desk-hot-rate"]);
    let mut plan = ExperimentPlan::from_toml(&text).unwrap();
    assert_eq!(plan, ExperimentPlan::desk(SweepVariable::HotRate));

    plan.grid.truncate(2);
    plan.generator.num_files = 10;
    plan.generator.num_scenarios = 2;
    plan.solver.multistarts = 1;
    let plan_path = dir.path().join("plan.toml");
    fs::write(&plan_path, plan.to_toml().unwrap()).unwrap();
    let out_dir = dir.path().join("out");
    let args = [
        "sweep",
        "--config",
        plan_path.to_str().unwrap(),
        "--runs",
        "1",
        "--method",
        "gh1",
        "--out",
        out_dir.to_str().unwrap(),
    ];
    ok(&args);
    let csv = fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2);
    assert!(csv.lines().skip(1).all(|l| l.contains(",gh1,")));
    assert!(out_dir.join("summary.json").exists());
    for panel in ["profit", "profit_split", "arar", "accepted_counts"] {
        assert!(out_dir.join(format!("plot_hot_rate_{panel}.csv")).exists());
    }

    // same plan, same bytes
    ok(&args);
    assert_eq!(fs::read_to_string(out_dir.join("results.csv")).unwrap(), csv);
}

#[test]
fn validate_queue_reports_the_analytic_wait() {
    let out = ok(&[
        "validate-queue",
        "--mu",
        "2000",
        "--class",
        "10:100",
        "--horizon",
        "200000",
        "--seed",
        "4",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["analytic_wait_s"].as_f64().unwrap() - 0.05).abs() < 1e-12);
    assert!(v["relative_error"].as_f64().unwrap() < 0.1);
}

#[test]
fn bad_input_fails_cleanly() {
    let out = tierbid(&["validate-queue", "--mu", "500", "--class", "10:100"]);
    assert!(!out.status.success());
    let out = tierbid(&["validate-queue", "--class", "ten:100"]);
    assert!(!out.status.success());
    let out = tierbid(&["solve", "--instance", "/nonexistent/instance.json"]);
    assert!(!out.status.success());
    let out = tierbid(&["sweep"]);
    assert!(!out.status.success());
}
