use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulation::{simulate, SignalSpec, SimTrace};

use super::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSummary {
    /// `(Δx1, Δx2)` in m.
    pub net_displacement: [f64; 2],
    /// Signed mean velocity of the rear block (m/s).
    pub average_speed: f64,
    pub max_abs_center_of_mass: f64,
    /// Coefficient of determination of a line through `x1(t)`.
    pub linearity_r2: f64,
    pub samples: usize,
    pub duration: f64,
}

impl TraceSummary {
    pub fn of(trace: &SimTrace, cfg: &ExperimentConfig) -> Result<Self> {
        let (d1, d2) = trace.net_displacement()?;
        Ok(Self {
            net_displacement: [d1, d2],
            average_speed: trace.average_speed()?,
            max_abs_center_of_mass: trace.max_abs_center_of_mass(&cfg.params),
            linearity_r2: trace.displacement_linearity(),
            samples: trace.len(),
            duration: trace.duration(),
        })
    }
}

/// Single simulation at the configured operating point.
pub fn run_trace(cfg: &ExperimentConfig) -> Result<(SimTrace, TraceSummary)> {
    cfg.validate()?;
    let trace = simulate(&cfg.params, &cfg.drive(), cfg.duration, cfg.dt, cfg.friction)?;
    let summary = TraceSummary::of(&trace, cfg)?;
    Ok((trace, summary))
}

/// Rear-block displacement over the configured horizon.
fn displacement(cfg: &ExperimentConfig) -> Result<f64> {
    let trace = simulate(&cfg.params, &cfg.drive(), cfg.duration, cfg.dt, cfg.friction)?;
    Ok(trace.net_displacement()?.0)
}

/// Runs `f` on a pool of `jobs` workers (0 picks the machine default).
pub fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid("jobs", e.to_string()))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyGrid {
    pub axial_freqs: Vec<f64>,
    pub friction_freqs: Vec<f64>,
    /// `displacement[row][col]`: friction frequency by axial frequency.
    pub displacement: Vec<Vec<f64>>,
}

impl FrequencyGrid {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "friction_hz/axial_hz")?;
        for f in &self.axial_freqs {
            write!(w, ",{f}")?;
        }
        writeln!(w)?;
        for (f, row) in self.friction_freqs.iter().zip(&self.displacement) {
            write!(w, "{f}")?;
            for d in row {
                write!(w, ",{d}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// `|Δx1|` of the cells whose two frequencies coincide.
    pub fn diagonal(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (r, fr) in self.friction_freqs.iter().enumerate() {
            for (c, fa) in self.axial_freqs.iter().enumerate() {
                if fr == fa {
                    out.push((*fr, self.displacement[r][c].abs()));
                }
            }
        }
        out
    }

    pub fn off_diagonal(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (r, fr) in self.friction_freqs.iter().enumerate() {
            for (c, fa) in self.axial_freqs.iter().enumerate() {
                if fr != fa {
                    out.push(self.displacement[r][c].abs());
                }
            }
        }
        out
    }
}

/// Displacement over every (friction, axial) frequency pair at the
/// configured phase difference.
pub fn run_frequency_grid(cfg: &ExperimentConfig, jobs: usize) -> Result<FrequencyGrid> {
    cfg.validate()?;
    let axial = cfg.sweep.axial_freqs.clone();
    let friction = cfg.sweep.friction_freqs.clone();
    let cells: Vec<(f64, f64)> = friction
        .iter()
        .flat_map(|&fr| axial.iter().map(move |&fa| (fr, fa)))
        .collect();
    let values = with_pool(jobs, || {
        cells
            .par_iter()
            .map(|&(fr, fa)| {
                let mut c = cfg.clone();
                c.signals.fa = c.signals.fa.with_freq(fa);
                c.signals.mu1 = c.signals.mu1.with_freq(fr);
                c.signals.mu2 = c.signals.mu2.with_freq(fr);
                displacement(&c)
            })
            .collect::<Result<Vec<f64>>>()
    })??;
    Ok(FrequencyGrid {
        displacement: values.chunks(axial.len()).map(<[f64]>::to_vec).collect(),
        axial_freqs: axial,
        friction_freqs: friction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSweep {
    pub phases: Vec<f64>,
    pub mass_trials: Vec<f64>,
    /// `displacement[phase][trial]`
    pub displacement: Vec<Vec<f64>>,
}

impl PhaseSweep {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "phi")?;
        for m in &self.mass_trials {
            write!(w, ",mass_{m}")?;
        }
        writeln!(w)?;
        for (phi, row) in self.phases.iter().zip(&self.displacement) {
            write!(w, "{phi}")?;
            for d in row {
                write!(w, ",{d}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn trial(&self, j: usize) -> Vec<f64> {
        self.displacement.iter().map(|row| row[j]).collect()
    }

    /// Largest `|Δx1|` over the phase list for trial `j`.
    pub fn peak(&self, j: usize) -> f64 {
        self.trial(j).iter().map(|d| d.abs()).fold(0.0, f64::max)
    }
}

/// Displacement against the phase difference, one column per block mass.
pub fn run_phase_sweep(cfg: &ExperimentConfig, jobs: usize) -> Result<PhaseSweep> {
    cfg.validate()?;
    let phases = cfg.sweep.phases.clone();
    let masses = cfg.sweep.mass_trials.clone();
    let cells: Vec<(f64, f64)> = phases
        .iter()
        .flat_map(|&phi| masses.iter().map(move |&m| (phi, m)))
        .collect();
    let values = with_pool(jobs, || {
        cells
            .par_iter()
            .map(|&(phi, m)| {
                let mut c = cfg.clone();
                c.phi = phi;
                c.params = c.params.with_masses(m, m);
                displacement(&c)
            })
            .collect::<Result<Vec<f64>>>()
    })??;
    Ok(PhaseSweep {
        displacement: values.chunks(masses.len()).map(<[f64]>::to_vec).collect(),
        phases,
        mass_trials: masses,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    /// Axial-force amplitude, also used as its bias (N).
    pub amplitude: f64,
    /// Signed average speed at that amplitude (m/s).
    pub speed: f64,
    pub target_speed: f64,
    /// `(|speed| − target) / target`
    pub relative_error: f64,
    /// Every `(amplitude, speed)` evaluated, in scan order.
    pub scan: Vec<(f64, f64)>,
}

/// Scans the axial-force amplitude (with `bias = amplitude`, so the force
/// never pulls) and keeps the value whose speed magnitude is closest to the
/// target. A coarse grid over the configured range is refined around the
/// best point down to the configured resolution.
pub fn calibrate_amplitude(cfg: &ExperimentConfig, jobs: usize) -> Result<Calibration> {
    cfg.validate()?;
    let spec = cfg.calibration;
    let speed_at = |a: f64| -> Result<f64> {
        let mut c = cfg.clone();
        c.signals.fa = SignalSpec { amplitude: a, bias: a, ..c.signals.fa };
        let trace = simulate(&c.params, &c.drive(), c.duration, c.dt, c.friction)?;
        trace.average_speed()
    };
    let grid = |lo: f64, hi: f64, step: f64| -> Vec<f64> {
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| lo + step * i as f64).collect()
    };
    let evaluate = |amps: Vec<f64>| -> Result<Vec<(f64, f64)>> {
        with_pool(jobs, || {
            amps.par_iter()
                .map(|&a| speed_at(a).map(|s| (a, s)))
                .collect::<Result<Vec<_>>>()
        })?
    };
    let miss = |s: f64| (s.abs() - spec.target_speed).abs();

    let mut scan = evaluate(grid(spec.amplitude_min, spec.amplitude_max, spec.coarse_step))?;
    let mut best = *scan
        .iter()
        .min_by(|a, b| miss(a.1).total_cmp(&miss(b.1)))
        .ok_or_else(|| Error::invalid("calibration", "empty amplitude scan"))?;
    let mut step = spec.coarse_step;
    while step > spec.resolution * (1.0 + 1e-9) {
        let next = (step / 10.0).max(spec.resolution);
        let lo = (best.0 - step).max(spec.amplitude_min);
        let hi = (best.0 + step).min(spec.amplitude_max);
        let local = evaluate(grid(lo, hi, next))?;
        for &p in &local {
            if miss(p.1) < miss(best.1) {
                best = p;
            }
        }
        scan.extend(local);
        step = next;
    }
    Ok(Calibration {
        amplitude: best.0,
        speed: best.1,
        target_speed: spec.target_speed,
        relative_error: (best.1.abs() - spec.target_speed) / spec.target_speed,
        scan,
    })
}
