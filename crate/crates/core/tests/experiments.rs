use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use peristalsis_core::experiments::{
    calibrate_amplitude, run_frequency_grid, run_phase_sweep, run_trace, write_file, ExperimentConfig,
    CALIBRATED_FA_AMPLITUDE,
};
use peristalsis_core::gait::simulate_gait;
use peristalsis_core::simulation::{SignalSpec, SimTrace};

fn short(duration: f64) -> ExperimentConfig {
    ExperimentConfig {
        duration,
        ..ExperimentConfig::default()
    }
}

fn frictionless(mut cfg: ExperimentConfig) -> ExperimentConfig {
    cfg.signals.mu1 = SignalSpec::constant(0.0);
    cfg.signals.mu2 = SignalSpec::constant(0.0);
    cfg
}

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn calibration_recovers_frozen_amplitude() {
    let mut cfg = ExperimentConfig::default();
    cfg.calibration.amplitude_min = 12.0;
    cfg.calibration.amplitude_max = 14.0;
    let cal = calibrate_amplitude(&cfg, 0).unwrap();
    assert!(
        (cal.amplitude - CALIBRATED_FA_AMPLITUDE).abs() <= 0.02,
        "calibrated {} vs frozen {CALIBRATED_FA_AMPLITUDE}",
        cal.amplitude
    );
    assert!(cal.relative_error.abs() < 0.01, "{cal:?}");
}

#[test]
fn grid_is_deterministic_and_independent_of_worker_count() {
    let mut cfg = short(4.0);
    cfg.sweep.axial_freqs = vec![0.5, 1.0];
    cfg.sweep.friction_freqs = vec![0.5, 1.0, 2.0];
    let a = run_frequency_grid(&cfg, 1).unwrap();
    let b = run_frequency_grid(&cfg, 3).unwrap();
    let c = run_frequency_grid(&cfg, 3).unwrap();
    assert_eq!(a, b);
    assert_eq!(b, c);
    assert_eq!(a.displacement.len(), 3);
    assert!(a.displacement.iter().all(|row| row.len() == 2));
}

#[test]
fn single_cell_grid_matches_single_run() {
    let mut cfg = short(5.0);
    cfg.sweep.axial_freqs = vec![1.0];
    cfg.sweep.friction_freqs = vec![1.0];
    let grid = run_frequency_grid(&cfg, 2).unwrap();
    let (_, summary) = run_trace(&cfg).unwrap();
    assert_eq!(grid.displacement[0][0], summary.net_displacement[0]);
}

#[test]
fn phase_sweep_is_deterministic_across_workers() {
    let mut cfg = short(3.0);
    cfg.sweep.phases = vec![0.0, 1.0, 2.0, 4.0];
    let a = run_phase_sweep(&cfg, 1).unwrap();
    let b = run_phase_sweep(&cfg, 4).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.trial(1).len(), 4);
}

#[test]
fn frictionless_sweep_ignores_phase_and_keeps_center_of_mass() {
    let mut cfg = frictionless(short(6.0));
    cfg.sweep.phases = vec![0.0, 0.7, 2.0, 5.5];
    let sweep = run_phase_sweep(&cfg, 0).unwrap();
    for j in 0..sweep.mass_trials.len() {
        let col = sweep.trial(j);
        assert!(col.iter().all(|d| (d - col[0]).abs() < 1e-12), "{col:?}");
    }
    let (_, summary) = run_trace(&cfg).unwrap();
    assert!(summary.max_abs_center_of_mass < 1e-9);
}

#[test]
fn undriven_frictionless_sweep_is_all_zero() {
    let mut cfg = frictionless(short(2.0));
    cfg.signals.fa = SignalSpec::constant(0.0);
    cfg.sweep.phases = vec![0.0, 1.0, 3.0];
    let sweep = run_phase_sweep(&cfg, 0).unwrap();
    assert!(sweep.displacement.iter().flatten().all(|&d| d == 0.0));
}

#[test]
fn trace_csv_round_trips_through_disk() {
    let cfg = short(0.5);
    let (trace, _) = run_trace(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/trace.csv");
    write_file(&path, |w| trace.write_csv(w)).unwrap();
    let back = SimTrace::read_csv(BufReader::new(File::open(&path).unwrap())).unwrap();
    assert_eq!(back.states, trace.states);
    assert_eq!(back.inputs, trace.inputs);
    assert!((back.dt - trace.dt).abs() < 1e-15);
}

#[test]
fn config_files_load_and_validate() {
    for name in ["default.json", "gait.json"] {
        let cfg = ExperimentConfig::load(Some(&config_path(name)), &[]).unwrap();
        cfg.validate().unwrap();
    }
    let over = ExperimentConfig::load(Some(&config_path("default.json")), &["duration=7".into()]).unwrap();
    assert_eq!(over.duration, 7.0);
}

#[test]
fn gait_net_advance_matches_stride_length() {
    let cfg = ExperimentConfig::load(Some(&config_path("gait.json")), &[]).unwrap();
    let run = simulate_gait(&cfg.gait.schedule, &cfg.params, &cfg.gait.options).unwrap();
    let n = run.stride_displacements.len();
    assert_eq!(n, cfg.gait.options.strides);
    let total: f64 = run.stride_displacements.iter().sum();
    let predicted = n as f64 * run.metrics.stride_length;
    assert!(
        (total - predicted).abs() <= 0.05 * predicted.abs(),
        "net {total} vs {n} x {}",
        run.metrics.stride_length
    );
}
