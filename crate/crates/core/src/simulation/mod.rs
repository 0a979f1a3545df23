//! Discrete-time friction-switched locomotion: the ZOH plant driven by a
//! feedforward axial force and square-wave friction coefficients, with
//! friction fed back from the sampled velocities.

mod plant;
mod signal;
mod trace;

pub use plant::{mechanical_energy, step, AppliedInput, FrictionMode, FrictionPlant, INSTABILITY_BOUND};
pub use signal::{SignalKind, SignalSpec};
pub use trace::{linear_fit_r2, SimTrace, TRACE_CSV_HEADER};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RobotParams, StateVec};

/// Default sample period (1 kHz).
pub const DEFAULT_DT: f64 = 1e-3;

/// The three feedforward channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSignals {
    pub fa: SignalSpec,
    pub mu1: SignalSpec,
    pub mu2: SignalSpec,
}

impl DriveSignals {
    /// Checks each spec and keeps the friction signals inside their bounds
    /// (or identically zero).
    pub fn validate(&self, params: &RobotParams) -> Result<()> {
        self.fa.validate("fa")?;
        for (name, spec, (lo, hi)) in [
            ("mu1", &self.mu1, (params.mu_lo_1, params.mu_hi_1)),
            ("mu2", &self.mu2, (params.mu_lo_2, params.mu_hi_2)),
        ] {
            spec.validate(name)?;
            // identically-zero friction is the frictionless experiment
            if spec.is_identically_zero() {
                continue;
            }
            let (min, max) = spec.range();
            let slack = 1e-12 * hi;
            if min < lo - slack || max > hi + slack {
                return Err(Error::invalid(
                    name,
                    format!("range [{min}, {max}] leaves the friction bounds [{lo}, {hi}]"),
                ));
            }
        }
        Ok(())
    }
}

/// Number of whole sample periods in `duration`.
pub fn step_count(duration: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::invalid("duration", format!("must be > 0, got {duration}")));
    }
    let steps = (duration / dt).round();
    if (steps * dt - duration).abs() > 1e-9 * duration {
        return Err(Error::invalid(
            "duration",
            format!("{duration} s is not a whole number of {dt} s periods"),
        ));
    }
    Ok(steps as usize)
}

/// Runs the loop from the zero state.
pub fn simulate(
    params: &RobotParams,
    signals: &DriveSignals,
    duration: f64,
    dt: f64,
    mode: FrictionMode,
) -> Result<SimTrace> {
    simulate_from(params, signals, duration, dt, mode, StateVec::ZERO)
}

/// Runs the loop from `initial`. The trace holds `duration/dt + 1` samples;
/// the last row's inputs are those that would be applied next.
pub fn simulate_from(
    params: &RobotParams,
    signals: &DriveSignals,
    duration: f64,
    dt: f64,
    mode: FrictionMode,
    initial: StateVec,
) -> Result<SimTrace> {
    params.validate()?;
    signals.validate(params)?;
    let steps = step_count(duration, dt)?;
    let mut plant = FrictionPlant::new(*params, dt, mode)?.with_state(initial);
    let mut trace = SimTrace::with_capacity(dt, steps + 1);
    for n in 0..=steps {
        let fa = signals.fa.sample(n, dt);
        let mu1 = signals.mu1.sample(n, dt);
        let mu2 = signals.mu2.sample(n, dt);
        if n == steps {
            // record the final sample without advancing past the horizon
            let mut tail = plant.clone();
            let (s, u) = tail.advance(fa, mu1, mu2)?;
            trace.push(s, u);
        } else {
            let (s, u) = plant.advance(fa, mu1, mu2)?;
            trace.push(s, u);
        }
    }
    Ok(trace)
}
