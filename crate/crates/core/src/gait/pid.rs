//! Duty-cycle PID loops against a first-order valve/actuator model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::schedule::{Actuator, GaitSchedule};

/// Samples ignored after every reference change when scoring a loop.
pub const DEFAULT_SETTLING_WINDOW_S: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    /// duty per psi
    pub kp: f64,
    /// duty per psi·s
    pub ki: f64,
    /// duty per psi/s
    pub kd: f64,
    #[serde(default)]
    pub output_min: f64,
    #[serde(default = "one")]
    pub output_max: f64,
}

fn one() -> f64 {
    1.0
}

impl PidGains {
    pub fn new(kp: f64, ki: f64, kd: f64) -> Self {
        Self {
            kp,
            ki,
            kd,
            output_min: 0.0,
            output_max: 1.0,
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        for (f, v) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name}.{f}"), format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(0.0 <= self.output_min && self.output_min < self.output_max && self.output_max <= 1.0) {
            return Err(Error::invalid(
                format!("{name}.output_min"),
                "output range must satisfy 0 <= output_min < output_max <= 1",
            ));
        }
        Ok(())
    }
}

/// Gains for the three actuator loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopGains {
    pub rear: PidGains,
    pub central: PidGains,
    pub front: PidGains,
}

impl Default for LoopGains {
    /// Found by [`tune_gains`] on the prototype stride with the default
    /// valve model.
    fn default() -> Self {
        Self {
            rear: PidGains::new(2.0, 40.0, 0.001487),
            central: PidGains::new(7.744247, 100.0, 0.030183),
            front: PidGains::new(10.0, 100.0, 0.026219),
        }
    }
}

impl LoopGains {
    pub fn get(&self, a: Actuator) -> PidGains {
        match a {
            Actuator::Rear => self.rear,
            Actuator::Central => self.central,
            Actuator::Front => self.front,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rear.validate("gains.rear")?;
        self.central.validate("gains.central")?;
        self.front.validate("gains.front")
    }
}

/// Valve plus actuator volume driven by a PWM duty cycle:
/// `dp/dt = d·(p_supply − p)/τ_inflate + (1 − d)·(p_vacuum − p)/τ_deflate`,
/// with the slew limited to `rate_limit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValvePlant {
    pub tau_inflate: f64,
    pub tau_deflate: f64,
    pub p_supply: f64,
    pub p_vacuum: f64,
    pub rate_limit: f64,
}

impl Default for ValvePlant {
    fn default() -> Self {
        Self {
            tau_inflate: 0.2,
            tau_deflate: 0.2,
            p_supply: 5.0,
            p_vacuum: -0.75,
            rate_limit: 20.0,
        }
    }
}

impl ValvePlant {
    pub fn validate(&self) -> Result<()> {
        for (f, v) in [("tau_inflate", self.tau_inflate), ("tau_deflate", self.tau_deflate)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("plant.{f}"), format!("must be > 0, got {v}")));
            }
        }
        if !(self.p_supply > 0.0 && self.p_supply.is_finite()) {
            return Err(Error::invalid("plant.p_supply", format!("must be > 0, got {}", self.p_supply)));
        }
        if !(self.p_vacuum <= 0.0 && self.p_vacuum.is_finite()) {
            return Err(Error::invalid("plant.p_vacuum", format!("must be <= 0, got {}", self.p_vacuum)));
        }
        if !(self.rate_limit > 0.0) {
            return Err(Error::invalid("plant.rate_limit", format!("must be > 0, got {}", self.rate_limit)));
        }
        Ok(())
    }

    /// Pressure after holding `duty` for `dt`, integrated exactly and then
    /// slew-limited.
    pub fn step(&self, p: f64, duty: f64, dt: f64) -> f64 {
        let d = duty.clamp(0.0, 1.0);
        let gain = d / self.tau_inflate + (1.0 - d) / self.tau_deflate;
        let target = (d * self.p_supply / self.tau_inflate + (1.0 - d) * self.p_vacuum / self.tau_deflate) / gain;
        let next = target + (p - target) * (-gain * dt).exp();
        let max_step = self.rate_limit * dt;
        p + (next - p).clamp(-max_step, max_step)
    }
}

/// PID with derivative on the measurement and conditional integration.
#[derive(Debug, Clone)]
pub struct PidController {
    gains: PidGains,
    integral: f64,
    prev_measurement: Option<f64>,
}

impl PidController {
    pub fn new(gains: PidGains) -> Self {
        Self {
            gains,
            integral: 0.0,
            prev_measurement: None,
        }
    }

    pub fn update(&mut self, reference: f64, measurement: f64, dt: f64) -> f64 {
        let g = self.gains;
        let error = reference - measurement;
        let rate = self.prev_measurement.map_or(0.0, |prev| (measurement - prev) / dt);
        self.prev_measurement = Some(measurement);
        let integral = self.integral + error * dt;
        let raw = g.kp * error + g.ki * integral - g.kd * rate;
        // the integrator only advances while the valve is not saturated
        if raw > g.output_min && raw < g.output_max {
            self.integral = integral;
        }
        raw.clamp(g.output_min, g.output_max)
    }
}

/// One closed loop: controller, valve model and the measured pressure.
#[derive(Debug, Clone)]
pub struct PressureLoop {
    controller: PidController,
    plant: ValvePlant,
    pressure: f64,
}

impl PressureLoop {
    pub fn new(gains: PidGains, plant: ValvePlant, initial_psi: f64) -> Self {
        Self {
            controller: PidController::new(gains),
            plant,
            pressure: initial_psi,
        }
    }

    pub fn pressure(&self) -> f64 {
        self.pressure
    }

    /// Samples the sensor, commands a duty and advances the plant one
    /// period. Returns the sampled pressure and the duty.
    pub fn step(&mut self, reference: f64, dt: f64) -> (f64, f64) {
        let measured = self.pressure;
        let duty = self.controller.update(reference, measured, dt);
        self.pressure = self.plant.step(measured, duty, dt);
        (measured, duty)
    }
}

/// Piecewise-constant pressure reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureProfile {
    /// `(duration_s, psi)` pairs in order.
    pub segments: Vec<(f64, f64)>,
}

impl PressureProfile {
    pub fn from_schedule(sched: &GaitSchedule, actuator: Actuator, strides: usize) -> Self {
        let stride = sched.phases.iter().map(|p| (p.duration_s, p.pressure(actuator)));
        Self {
            segments: std::iter::repeat_n(stride, strides).flatten().collect(),
        }
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.0).sum()
    }

    /// Reference value at each sample of the profile.
    pub fn samples(&self, dt: f64) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for (i, &(duration, psi)) in self.segments.iter().enumerate() {
            let n = (duration / dt).round();
            if n < 1.0 || (n * dt - duration).abs() > 1e-9 * duration {
                return Err(Error::invalid(
                    format!("reference.segments[{i}]"),
                    format!("{duration} s is not a whole number of {dt} s periods"),
                ));
            }
            out.extend(std::iter::repeat_n(psi, n as usize));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopTrace {
    pub dt: f64,
    pub reference: Vec<f64>,
    pub measured: Vec<f64>,
    pub duty: Vec<f64>,
}

/// Root-mean-square tracking error, skipping `window` samples after each
/// reference change. A reference that starts away from `initial` counts as
/// a change at the first sample.
pub fn tracking_rmse(reference: &[f64], measured: &[f64], initial: f64, window: usize) -> f64 {
    let mut hold = 0usize;
    let mut prev = initial;
    let (mut sum, mut count) = (0.0, 0usize);
    for (&r, &m) in reference.iter().zip(measured) {
        if r != prev {
            hold = window;
        }
        prev = r;
        if hold > 0 {
            hold -= 1;
            continue;
        }
        sum += (r - m) * (r - m);
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}

/// Runs one loop from 0 psi over the whole profile and scores it with the
/// default settling window.
pub fn pid_track(
    reference: &PressureProfile,
    gains: PidGains,
    plant: &ValvePlant,
    dt: f64,
) -> Result<(LoopTrace, f64)> {
    pid_track_with_window(reference, gains, plant, dt, DEFAULT_SETTLING_WINDOW_S)
}

pub fn pid_track_with_window(
    reference: &PressureProfile,
    gains: PidGains,
    plant: &ValvePlant,
    dt: f64,
    settling_window_s: f64,
) -> Result<(LoopTrace, f64)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
    }
    gains.validate("gains")?;
    plant.validate()?;
    let refs = reference.samples(dt)?;
    if refs.is_empty() {
        return Err(Error::invalid("reference", "profile is empty"));
    }
    if let Some(r) = refs.iter().find(|&&r| r < plant.p_vacuum || r > plant.p_supply) {
        return Err(Error::invalid(
            "reference",
            format!("{r} psi lies outside [{}, {}]", plant.p_vacuum, plant.p_supply),
        ));
    }
    let mut lp = PressureLoop::new(gains, *plant, 0.0);
    let mut trace = LoopTrace {
        dt,
        reference: Vec::with_capacity(refs.len()),
        measured: Vec::with_capacity(refs.len()),
        duty: Vec::with_capacity(refs.len()),
    };
    for &r in &refs {
        let (m, d) = lp.step(r, dt);
        trace.reference.push(r);
        trace.measured.push(m);
        trace.duty.push(d);
    }
    let window = (settling_window_s / dt).round() as usize;
    let rmse = tracking_rmse(&trace.reference, &trace.measured, 0.0, window);
    Ok((trace, rmse))
}

/// Search box for [`tune_gains`]: `(kp, ki, kd)` lower and upper bounds.
pub const TUNE_BOUNDS: [(f64, f64); 3] = [(0.1, 10.0), (0.1, 100.0), (1e-4, 0.05)];

/// Coordinate search over `(kp, ki, kd)` on a log scale inside
/// [`TUNE_BOUNDS`], minimizing the post-settling RMSE of `reference`.
pub fn tune_gains(
    reference: &PressureProfile,
    plant: &ValvePlant,
    dt: f64,
    start: PidGains,
) -> Result<(PidGains, f64)> {
    let score = |g: PidGains| pid_track(reference, g, plant, dt).map(|(_, r)| r);
    let clamp_into = |mut g: PidGains| {
        g.kp = g.kp.clamp(TUNE_BOUNDS[0].0, TUNE_BOUNDS[0].1);
        g.ki = g.ki.clamp(TUNE_BOUNDS[1].0, TUNE_BOUNDS[1].1);
        g.kd = g.kd.clamp(TUNE_BOUNDS[2].0, TUNE_BOUNDS[2].1);
        g
    };
    let mut best = clamp_into(start);
    let mut best_rmse = score(best)?;
    let mut factor: f64 = 2.0;
    while factor > 1.01 {
        let mut improved = false;
        for axis in 0..3 {
            for scale in [factor, 1.0 / factor] {
                let mut g = best;
                match axis {
                    0 => g.kp *= scale,
                    1 => g.ki *= scale,
                    _ => g.kd *= scale,
                }
                let g = clamp_into(g);
                if g == best {
                    continue;
                }
                let r = score(g)?;
                if r < best_rmse {
                    best = g;
                    best_rmse = r;
                    improved = true;
                }
            }
        }
        if !improved {
            factor = factor.sqrt();
        }
    }
    Ok((best, best_rmse))
}
