use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{psi_to_pa, Block, RobotParams};
use crate::simulation::{FrictionMode, FrictionPlant, SimTrace, DEFAULT_DT};

use super::anchoring::{friction_for_pressure, schedule_anchoring, AnchoringCheck, ANCHOR_THRESHOLD_PSI};
use super::pid::{tracking_rmse, LoopGains, PressureLoop, ValvePlant};
use super::schedule::{Actuator, GaitSchedule};

pub const PRESSURE_CSV_HEADER: &str =
    "t,p_ref_rear,p_m_rear,p_ref_central,p_m_central,p_ref_front,p_m_front,duty_rear,duty_central,duty_front";

/// Pressure shortfall below the anchoring threshold still counted as
/// ground contact, so a loop hovering just under its set point keeps grip.
pub const DEFAULT_CONTACT_TOLERANCE_PSI: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaitOptions {
    pub strides: usize,
    pub dt: f64,
    pub gains: LoopGains,
    pub plant: ValvePlant,
    /// Stick-slip band of the friction model (m/s).
    pub eps_v: f64,
    pub mu_static_scale: f64,
    pub anchor_threshold_psi: f64,
    pub contact_tolerance_psi: f64,
    /// Fail instead of warning when the anchoring inequalities do not hold.
    pub strict: bool,
}

impl Default for GaitOptions {
    fn default() -> Self {
        Self {
            strides: 10,
            dt: DEFAULT_DT,
            gains: LoopGains::default(),
            plant: ValvePlant::default(),
            eps_v: 1e-4,
            mu_static_scale: 1.0,
            anchor_threshold_psi: ANCHOR_THRESHOLD_PSI,
            contact_tolerance_psi: DEFAULT_CONTACT_TOLERANCE_PSI,
            strict: false,
        }
    }
}

impl GaitOptions {
    pub fn friction_mode(&self) -> FrictionMode {
        FrictionMode::Karnopp {
            eps_v: self.eps_v,
            mu_static_scale: self.mu_static_scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.strides == 0 {
            return Err(Error::invalid("gait.strides", "must be >= 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("gait.dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.anchor_threshold_psi > 0.0 && self.anchor_threshold_psi.is_finite()) {
            return Err(Error::invalid("gait.anchor_threshold_psi", "must be > 0"));
        }
        if !(self.contact_tolerance_psi >= 0.0 && self.contact_tolerance_psi < self.anchor_threshold_psi) {
            return Err(Error::invalid(
                "gait.contact_tolerance_psi",
                "must lie in [0, anchor_threshold_psi)",
            ));
        }
        self.gains.validate()?;
        self.plant.validate()?;
        self.friction_mode().validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitMetrics {
    /// Mean advance of the front block per stride, first stride excluded
    /// when more than one was run.
    pub stride_length: f64,
    pub protrusion_time: f64,
    pub stance_time: f64,
    pub stride_period: f64,
    /// Front-block advance over all strides divided by their duration.
    pub avg_speed: f64,
}

/// Reference, measured pressure and duty of the three loops, one row per
/// sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureTrace {
    pub dt: f64,
    pub reference: Vec<[f64; 3]>,
    pub measured: Vec<[f64; 3]>,
    pub duty: Vec<[f64; 3]>,
}

impl PressureTrace {
    pub fn with_capacity(dt: f64, n: usize) -> Self {
        Self {
            dt,
            reference: Vec::with_capacity(n),
            measured: Vec::with_capacity(n),
            duty: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    pub fn push(&mut self, reference: [f64; 3], measured: [f64; 3], duty: [f64; 3]) {
        self.reference.push(reference);
        self.measured.push(measured);
        self.duty.push(duty);
    }

    pub fn column(&self, which: Actuator) -> (Vec<f64>, Vec<f64>) {
        let i = which as usize;
        (
            self.reference.iter().map(|r| r[i]).collect(),
            self.measured.iter().map(|m| m[i]).collect(),
        )
    }

    /// Post-settling RMSE of one loop; see [`tracking_rmse`].
    pub fn rmse(&self, which: Actuator, settling_window_s: f64) -> f64 {
        let (r, m) = self.column(which);
        let window = (settling_window_s / self.dt).round() as usize;
        tracking_rmse(&r, &m, 0.0, window)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{PRESSURE_CSV_HEADER}")?;
        for n in 0..self.len() {
            let (r, m, d) = (self.reference[n], self.measured[n], self.duty[n]);
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                n as f64 * self.dt,
                r[0],
                m[0],
                r[1],
                m[1],
                r[2],
                m[2],
                d[0],
                d[1],
                d[2]
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty pressure file".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?;
        if header.trim() != PRESSURE_CSV_HEADER {
            return Err(Error::Parse(format!("unexpected header `{header}`")));
        }
        let mut times = Vec::new();
        let mut out = Self::with_capacity(0.0, 0);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let v: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", i + 2)))?;
            if v.len() != 10 {
                return Err(Error::Parse(format!("row {}: expected 10 fields, got {}", i + 2, v.len())));
            }
            times.push(v[0]);
            out.push([v[1], v[3], v[5]], [v[2], v[4], v[6]], [v[7], v[8], v[9]]);
        }
        if times.len() < 2 {
            return Err(Error::Parse("a trace needs at least two rows".into()));
        }
        out.dt = times[1] - times[0];
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct GaitRun {
    pub trace: SimTrace,
    pub pressures: PressureTrace,
    pub metrics: GaitMetrics,
    /// Front-block advance of each stride.
    pub stride_displacements: Vec<f64>,
    /// Largest excursion of a block within a phase in which its schedule
    /// anchors it.
    pub max_anchored_slip: f64,
    pub anchoring: Vec<AnchoringCheck>,
    pub warnings: Vec<String>,
}

/// Runs `opts.strides` strides of `sched` with pressure-tracking loops
/// feeding the stick-slip plant. The axial force follows the measured
/// central pressure and each block grips once its actuator is within
/// the contact tolerance of the anchoring threshold.
pub fn simulate_gait(sched: &GaitSchedule, params: &RobotParams, opts: &GaitOptions) -> Result<GaitRun> {
    params.validate()?;
    sched.validate()?;
    opts.validate()?;
    let dt = opts.dt;
    let phase_steps = sched.phase_steps(dt)?;
    let stride_steps: usize = phase_steps.iter().sum();
    let total = stride_steps * opts.strides;

    let anchoring = schedule_anchoring(sched, params, opts.anchor_threshold_psi);
    let mut warnings = Vec::new();
    for c in anchoring.iter().filter(|c| !c.feasible) {
        let msg = format!(
            "phase {} ({:?}): |fa| = {:.4} N against caps f1 = {:.4} N, f2 = {:.4} N",
            c.phase + 1,
            c.direction,
            c.fa,
            c.f1_cap,
            c.f2_cap
        );
        if opts.strict {
            return Err(Error::InfeasibleSchedule(msg));
        }
        warnings.push(format!("anchoring fails in {msg}"));
    }

    let mut plant = FrictionPlant::new(*params, dt, opts.friction_mode())?;
    let mut loops: Vec<PressureLoop> = Actuator::ALL
        .iter()
        .map(|&a| PressureLoop::new(opts.gains.get(a), opts.plant, 0.0))
        .collect();
    let contact = opts.anchor_threshold_psi - opts.contact_tolerance_psi;

    let mut trace = SimTrace::with_capacity(dt, total + 1);
    let mut pressures = PressureTrace::with_capacity(dt, total + 1);
    let mut phase_of_step = Vec::with_capacity(stride_steps);
    for (i, &n) in phase_steps.iter().enumerate() {
        phase_of_step.extend(std::iter::repeat_n(i, n));
    }

    for n in 0..=total {
        let phase = &sched.phases[phase_of_step[n % stride_steps]];
        let refs = Actuator::ALL.map(|a| phase.pressure(a));
        let last = n == total;
        let mut tail_loops;
        let active = if last {
            tail_loops = loops.clone();
            &mut tail_loops
        } else {
            &mut loops
        };
        let mut measured = [0.0; 3];
        let mut duty = [0.0; 3];
        for (k, lp) in active.iter_mut().enumerate() {
            let (m, d) = lp.step(refs[k], dt);
            measured[k] = m;
            duty[k] = d;
        }
        let fa = params.s_a * psi_to_pa(measured[1]);
        let mu1 = friction_for_pressure(params, Block::Rear, measured[0], contact);
        let mu2 = friction_for_pressure(params, Block::Front, measured[2], contact);
        let (s, u) = if last {
            plant.clone().advance(fa, mu1, mu2)?
        } else {
            plant.advance(fa, mu1, mu2)?
        };
        trace.push(s, u);
        pressures.push(refs, measured, duty);
    }

    let stride_displacements: Vec<f64> = (0..opts.strides)
        .map(|k| trace.states[(k + 1) * stride_steps].x2 - trace.states[k * stride_steps].x2)
        .collect();
    let steady = if stride_displacements.len() > 1 {
        &stride_displacements[1..]
    } else {
        &stride_displacements[..]
    };
    let stride_length = steady.iter().sum::<f64>() / steady.len() as f64;

    let mut max_anchored_slip: f64 = 0.0;
    let mut start = 0;
    for k in 0..opts.strides {
        for (i, &len) in phase_steps.iter().enumerate() {
            let ph = &sched.phases[i];
            let window = &trace.states[start..=start + len];
            let origin = window[0];
            if ph.rear_psi >= opts.anchor_threshold_psi {
                let slip = window.iter().map(|s| (s.x1 - origin.x1).abs()).fold(0.0, f64::max);
                max_anchored_slip = max_anchored_slip.max(slip);
            }
            if ph.front_psi >= opts.anchor_threshold_psi {
                let slip = window.iter().map(|s| (s.x2 - origin.x2).abs()).fold(0.0, f64::max);
                max_anchored_slip = max_anchored_slip.max(slip);
            }
            start += len;
        }
        debug_assert_eq!(start, (k + 1) * stride_steps);
    }

    let period = sched.stride_period();
    let metrics = GaitMetrics {
        stride_length,
        protrusion_time: sched.protrusion_time(),
        stance_time: sched.stance_time(),
        stride_period: period,
        avg_speed: (trace.states[total].x2 - trace.states[0].x2) / (period * opts.strides as f64),
    };
    Ok(GaitRun {
        trace,
        pressures,
        metrics,
        stride_displacements,
        max_anchored_slip,
        anchoring,
        warnings,
    })
}
