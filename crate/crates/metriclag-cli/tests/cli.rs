//! End-to-end tests of the `metriclag` binary: documented examples, exit
//! codes, strict-schema reporting and artifact determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_metriclag"))
}

fn run_with_out(args: &[&str], out: &Path) -> Output {
    bin()
        .args(args)
        .env("METRICLAG_OUT", out)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

#[test]
fn derive_evaluates_the_power_rule_example() {
    let out = bin()
        .args(["derive", "--expr", "t^2", "--kind", "conformable", "--alpha", "0.5", "--at", "4"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "16.0");
}

#[test]
fn newton_velocity_column_ends_at_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with_out(
        &["newton", "--option", "3", "--alpha", "0.75", "--v0", "1", "--t0", "1", "--t1", "4"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("newton/trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,x,v");
    let last = lines.last().unwrap();
    let v: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
    assert!((v - 0.5).abs() <= 1e-9, "final velocity {v}");
}

#[test]
fn props_suite_exits_clean() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with_out(&["props"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("all hold"));
    assert!(dir.path().join("props/report.csv").exists());
}

#[test]
fn unknown_config_keys_are_all_reported_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"task": "newton", "speed": 1, "turbo": 2, "time": {"t5_seconds": 1}}"#,
    )
    .unwrap();
    let out = run_with_out(&["newton", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    for key in ["`speed`", "`turbo`", "`time.t5_seconds`"] {
        assert!(err.contains(key), "{err}");
    }
}

#[test]
fn config_task_mismatch_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.json");
    fs::write(&cfg, r#"{"task": "schrodinger"}"#).unwrap();
    let out = run_with_out(&["newton", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("does not match"));
}

#[test]
fn config_and_flags_exclude_each_other() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.json");
    fs::write(&cfg, r#"{"task": "newton"}"#).unwrap();
    let out = run_with_out(
        &["newton", "--config", cfg.to_str().unwrap(), "--t1", "2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--t1"));
}

#[test]
fn non_finite_derivative_is_a_numerical_failure_with_exit_3() {
    let out = bin().args(["derive", "--expr", "1/x", "--at", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn identical_scenarios_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("wave.json");
    fs::write(
        &cfg,
        r#"{
            "name": "wave",
            "task": "schrodinger",
            "deformation": {"kind": "conformable", "alpha": 0.7},
            "grid": {"x_min": 0.0, "x_max": 6.0, "n_nodes": 65},
            "time": {"t0_seconds": 0.0, "t1_seconds": 1.0, "n_steps": 50}
        }"#,
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let r = run_with_out(&["schrodinger", "--config", cfg.to_str().unwrap()], out);
        assert!(r.status.success(), "{}", stderr(&r));
    }
    for file in ["wave/norms.csv", "wave/final_state.csv"] {
        let ba = fs::read(a.join(file)).unwrap();
        let bb = fs::read(b.join(file)).unwrap();
        assert_eq!(ba, bb, "{file} differs between reruns");
    }
}

#[test]
fn hamilton_reports_a_conserved_h_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with_out(
        &[
            "hamilton", "--potential", "0.5*x^2", "--x0", "0", "--v0", "1", "--t1", "12.5",
            "--steps", "250",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("hamilton/phase.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,q,p,H");
    let h: Vec<f64> = lines
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let drift = h.iter().map(|v| (v - h[0]).abs()).fold(0.0f64, f64::max);
    assert!(drift <= 1e-8, "H drift {drift}");
}

#[test]
fn noether_csv_reports_charge_and_residual_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with_out(
        &["noether_check", "--alpha", "0.7", "--t1", "1", "--steps", "60"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("noether_check/noether.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,Q,max_divergence_residual");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.len() >= 3);
    // ends carry no divergence stencil, interior rows do
    assert!(rows.first().unwrap()[2].is_empty());
    assert!(rows.last().unwrap()[2].is_empty());
    assert!(!rows[1][2].is_empty());
    let q: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    let drift = q.iter().map(|v| (v - q[0]).abs()).fold(0.0f64, f64::max);
    assert!(drift <= 1e-10, "charge drift {drift}");
}

#[test]
fn batch_runs_scenarios_concurrently_in_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg1 = dir.path().join("one.json");
    let cfg2 = dir.path().join("two.json");
    fs::write(
        &cfg1,
        r#"{"name": "one", "task": "newton", "time": {"t0_seconds": 0.0, "t1_seconds": 2.0, "n_steps": 50}}"#,
    )
    .unwrap();
    fs::write(&cfg2, r#"{"name": "two", "task": "props", "cases": 60}"#).unwrap();
    let out = run_with_out(
        &["batch", cfg1.to_str().unwrap(), cfg2.to_str().unwrap(), "--jobs", "2"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let pos1 = text.find("one.json").unwrap();
    let pos2 = text.find("two.json").unwrap();
    assert!(pos1 < pos2, "{text}");
    assert!(dir.path().join("one/trajectory.csv").exists());
    assert!(dir.path().join("two/report.csv").exists());
}

#[test]
fn emit_config_normalization_is_a_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let first = bin()
        .args(["newton", "--alpha", "0.6", "--option", "3", "--t0", "1", "--t1", "2", "--emit-config"])
        .output()
        .unwrap();
    assert!(first.status.success(), "{}", stderr(&first));
    let cfg = dir.path().join("normalized.json");
    fs::write(&cfg, stdout(&first)).unwrap();
    let second = bin()
        .args(["newton", "--config", cfg.to_str().unwrap(), "--emit-config"])
        .output()
        .unwrap();
    assert!(second.status.success(), "{}", stderr(&second));
    assert_eq!(stdout(&first), stdout(&second));
}

#[test]
fn scenario_out_dir_is_used_when_the_env_override_is_absent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.json");
    let out_dir = dir.path().join("custom-root");
    fs::write(
        &cfg,
        format!(
            r#"{{"name": "run", "task": "newton", "out_dir": {:?}}}"#,
            out_dir.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = bin()
        .args(["newton", "--config", cfg.to_str().unwrap()])
        .env_remove("METRICLAG_OUT")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out_dir.join("run/trajectory.csv").exists());
}
