//! Argument parsing and dispatch for the `peristalsis` command.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{error::ErrorKind, Args, Parser, Subcommand};
use serde::Serialize;

use peristalsis_core::controllability::{analyze, ControllabilityReport};
use peristalsis_core::experiments::{
    calibrate_amplitude, run_frequency_grid, run_phase_sweep, run_trace, write_file, write_json, ExperimentConfig,
};
use peristalsis_core::gait::{
    pid_track, simulate_gait, Actuator, AnchoringCheck, GaitMetrics, PressureProfile, PressureTrace,
    DEFAULT_SETTLING_WINDOW_S,
};
use peristalsis_core::model::{build_mimo, build_siso};
use peristalsis_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "peristalsis", version, about = "Friction-modulated crawler experiments")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Controllability ranks and reachable subspaces
    Analyze(Common),
    /// One simulation at the configured point: trace.csv, summary.json
    Simulate(Common),
    /// Displacement over the frequency grid: grid.csv
    SweepFreq(Common),
    /// Displacement against phase difference per mass trial: phase.csv
    SweepPhase(Common),
    /// Four-phase gait with pressure loops: trace.csv, pid_trace.csv, gait_metrics.json
    Gait(Common),
    /// Pressure tracking of the gait references: pid_trace.csv, pid_summary.json
    Pid(Common),
    /// Axial-force amplitude matching the reference speed: calibration.json
    Calibrate(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON configuration file (defaults apply to missing fields)
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override a config field, e.g. --set params.m1=0.3 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory (overrides output_dir)
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps (0 = one per core)
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Analyze(c)
            | Command::Simulate(c)
            | Command::SweepFreq(c)
            | Command::SweepPhase(c)
            | Command::Gait(c)
            | Command::Pid(c)
            | Command::Calibrate(c) => c,
        }
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let common = cli.command.common();
    let cfg = match load_config(common) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_VALIDATION;
        }
    };
    match dispatch(&cli.command, &cfg, common.jobs, out, err) {
        Ok(line) => {
            let _ = writeln!(out, "{line}");
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn load_config(common: &Common) -> peristalsis_core::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(common.config.as_deref(), &common.overrides)?;
    if let Some(dir) = &common.out {
        cfg.output_dir = dir.clone();
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct Analysis {
    siso: ControllabilityReport,
    mimo: ControllabilityReport,
}

#[derive(Serialize)]
struct GaitReport<'a> {
    metrics: GaitMetrics,
    strides: usize,
    stride_displacements: &'a [f64],
    max_anchored_slip: f64,
    anchoring: &'a [AnchoringCheck],
    warnings: &'a [String],
}

#[derive(Serialize)]
struct PidSummary {
    settling_window_s: f64,
    rmse_rear: f64,
    rmse_central: f64,
    rmse_front: f64,
    central_at_stride_end: f64,
}

fn path(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

fn dispatch(
    cmd: &Command,
    cfg: &ExperimentConfig,
    jobs: usize,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> peristalsis_core::Result<String> {
    match cmd {
        Command::Analyze(_) => {
            let siso = analyze(&build_siso(&cfg.params)?, &cfg.params)?;
            let mimo = analyze(&build_mimo(&cfg.params)?, &cfg.params)?;
            let line = format!(
                "siso rank {} (center of mass locked: {}), mimo rank {}",
                siso.rank, siso.cm_locked, mimo.rank
            );
            let report = Analysis { siso, mimo };
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report)?);
            write_json(&path(cfg, "analysis.json"), &report)?;
            Ok(line)
        }
        Command::Simulate(_) => {
            let (trace, summary) = run_trace(cfg)?;
            write_file(&path(cfg, "trace.csv"), |w| trace.write_csv(w))?;
            write_json(&path(cfg, "summary.json"), &summary)?;
            Ok(format!(
                "dx1 = {:.6} m, dx2 = {:.6} m, average speed = {:.6} m/s, max |x_cm| = {:.3e} m",
                summary.net_displacement[0],
                summary.net_displacement[1],
                summary.average_speed,
                summary.max_abs_center_of_mass
            ))
        }
        Command::SweepFreq(_) => {
            let grid = run_frequency_grid(cfg, jobs)?;
            write_file(&path(cfg, "grid.csv"), |w| grid.write_csv(w))?;
            Ok(format!(
                "{}x{} frequency grid written to {}",
                grid.friction_freqs.len(),
                grid.axial_freqs.len(),
                path(cfg, "grid.csv").display()
            ))
        }
        Command::SweepPhase(_) => {
            let sweep = run_phase_sweep(cfg, jobs)?;
            write_file(&path(cfg, "phase.csv"), |w| sweep.write_csv(w))?;
            let peaks: Vec<String> = (0..sweep.mass_trials.len())
                .map(|j| format!("m={} peak |dx1| = {:.4} m", sweep.mass_trials[j], sweep.peak(j)))
                .collect();
            Ok(format!("{} phases; {}", sweep.phases.len(), peaks.join(", ")))
        }
        Command::Gait(_) => {
            let run = simulate_gait(&cfg.gait.schedule, &cfg.params, &cfg.gait.options)?;
            for w in &run.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            write_file(&path(cfg, "trace.csv"), |w| run.trace.write_csv(w))?;
            write_file(&path(cfg, "pid_trace.csv"), |w| run.pressures.write_csv(w))?;
            let report = GaitReport {
                metrics: run.metrics,
                strides: cfg.gait.options.strides,
                stride_displacements: &run.stride_displacements,
                max_anchored_slip: run.max_anchored_slip,
                anchoring: &run.anchoring,
                warnings: &run.warnings,
            };
            write_json(&path(cfg, "gait_metrics.json"), &report)?;
            Ok(format!(
                "stride_period = {} s, stride_length = {:.4} m, avg_speed = {:.5} m/s",
                run.metrics.stride_period, run.metrics.stride_length, run.metrics.avg_speed
            ))
        }
        Command::Pid(_) => {
            let opts = &cfg.gait.options;
            let mut loops = Vec::new();
            for a in Actuator::ALL {
                let profile = PressureProfile::from_schedule(&cfg.gait.schedule, a, opts.strides);
                loops.push(pid_track(&profile, opts.gains.get(a), &opts.plant, opts.dt)?);
            }
            let mut pressures = PressureTrace::with_capacity(opts.dt, loops[0].0.reference.len());
            for n in 0..loops[0].0.reference.len() {
                pressures.push(
                    [0, 1, 2].map(|k| loops[k].0.reference[n]),
                    [0, 1, 2].map(|k| loops[k].0.measured[n]),
                    [0, 1, 2].map(|k| loops[k].0.duty[n]),
                );
            }
            let stride_end = cfg.gait.schedule.phase_steps(opts.dt)?.iter().sum::<usize>() - 1;
            let summary = PidSummary {
                settling_window_s: DEFAULT_SETTLING_WINDOW_S,
                rmse_rear: loops[0].1,
                rmse_central: loops[1].1,
                rmse_front: loops[2].1,
                central_at_stride_end: loops[1].0.measured[stride_end],
            };
            write_file(&path(cfg, "pid_trace.csv"), |w| pressures.write_csv(w))?;
            write_json(&path(cfg, "pid_summary.json"), &summary)?;
            Ok(format!(
                "rmse rear = {:.3e} psi, central = {:.3e} psi, front = {:.3e} psi",
                summary.rmse_rear, summary.rmse_central, summary.rmse_front
            ))
        }
        Command::Calibrate(_) => {
            let cal = calibrate_amplitude(cfg, jobs)?;
            write_json(&path(cfg, "calibration.json"), &cal)?;
            Ok(format!(
                "fa amplitude = bias = {} N gives {:.5} m/s ({:+.2}% against {} m/s)",
                cal.amplitude,
                cal.speed,
                100.0 * cal.relative_error,
                cal.target_speed
            ))
        }
    }
}

/// Maps a library error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}
