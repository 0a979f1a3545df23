use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_peristalsis"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn no_arguments_prints_usage_and_fails() {
    let o = bin().output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let text = String::from_utf8_lossy(&o.stdout) + String::from_utf8_lossy(&o.stderr);
    assert!(text.contains("Usage"), "{text}");
}

#[test]
fn unknown_subcommand_fails() {
    assert_eq!(bin().arg("fly").output().unwrap().status.code(), Some(1));
}

#[test]
fn analyze_reports_ranks() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["analyze"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("analysis.json"));
    let text = v.to_string();
    assert!(text.contains("\"rank\":2"), "{text}");
    assert!(text.contains("\"rank\":4"), "{text}");
}

#[test]
fn invalid_override_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["analyze", "--set", "params.m1=-2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("params.m1"));
    let o = run(&["analyze", "--set", "no_such_key=1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gait_writes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("gait.json");
    let o = run(&["gait", "--config", cfg.to_str().unwrap(), "--set", "gait.options.strides=3"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trace.csv", "pid_trace.csv", "gait_metrics.json"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let v = json(&dir.path().join("gait_metrics.json"));
    let period = v.pointer("/metrics/stride_period").and_then(|p| p.as_f64()).unwrap();
    assert!((period - 4.0).abs() < 1e-12);
    let stride = v.pointer("/metrics/stride_length").and_then(|p| p.as_f64()).unwrap();
    assert!(stride > 0.0);
}

#[test]
fn simulate_output_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["simulate", "--set", "duration=2", "--jobs", "1"];
    assert!(run(&args, a.path()).status.success());
    assert!(run(&args, b.path()).status.success());
    for f in ["trace.csv", "summary.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn sweep_freq_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["sweep-freq", "--set", "duration=2", "--set", "sweep.axial_freqs=[0.5,1]", "--set", "sweep.friction_freqs=[1]"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("friction_hz/axial_hz,"));
}
