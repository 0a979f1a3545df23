use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::gait::{GaitOptions, GaitSchedule};
use crate::model::RobotParams;
use crate::simulation::{step_count, DriveSignals, FrictionMode, SignalSpec, DEFAULT_DT};

/// Axial-force amplitude (and bias) reproducing the reference 1 Hz gait
/// speed under the default phase convention; see [`super::calibrate_amplitude`].
pub const CALIBRATED_FA_AMPLITUDE: f64 = 13.12;

/// Reference average speed of the 1 Hz, 0.4π rad run (6.31 m per minute).
pub const REFERENCE_SPEED: f64 = 0.1052;

/// How the phase difference `phi` enters the three drive signals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseConvention {
    /// `mu2` shifted by `phi` against `mu1`, which stays in phase with `fa`.
    #[default]
    FrictionPair,
    /// Both friction signals shifted by `phi` against `fa`, with `mu2` in
    /// antiphase to `mu1`.
    AxialToFriction,
}

impl PhaseConvention {
    /// Applies `phi` to base signals whose phases are taken as offsets.
    pub fn apply(self, base: &DriveSignals, phi: f64) -> DriveSignals {
        let mut s = *base;
        match self {
            PhaseConvention::FrictionPair => {
                s.mu2 = s.mu2.with_phase_offset(phi);
            }
            PhaseConvention::AxialToFriction => {
                s.mu1 = s.mu1.with_phase_offset(phi);
                s.mu2 = s.mu2.with_phase_offset(phi + PI);
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    /// Hz, grid columns.
    pub axial_freqs: Vec<f64>,
    /// Hz, grid rows; drives both friction signals.
    pub friction_freqs: Vec<f64>,
    /// rad
    pub phases: Vec<f64>,
    /// kg, applied to both blocks.
    pub mass_trials: Vec<f64>,
}

impl Default for SweepAxes {
    fn default() -> Self {
        let freqs = vec![0.1, 0.2, 0.25, 0.5, 1.0];
        Self {
            axial_freqs: freqs.clone(),
            friction_freqs: freqs,
            phases: uniform_phases(64),
            mass_trials: vec![0.1, 0.2],
        }
    }
}

/// `n` evenly spaced phases covering `[0, 2π)`.
pub fn uniform_phases(n: usize) -> Vec<f64> {
    (0..n).map(|i| TAU * i as f64 / n as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSpec {
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    /// Spacing of the coarse scan (N).
    pub coarse_step: f64,
    /// Final resolution of the refinement (N).
    pub resolution: f64,
    pub target_speed: f64,
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        Self {
            amplitude_min: 0.5,
            amplitude_max: 25.0,
            coarse_step: 0.5,
            resolution: 0.01,
            target_speed: REFERENCE_SPEED,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaitSection {
    pub schedule: GaitSchedule,
    pub options: GaitOptions,
}

/// Everything a command needs; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: RobotParams,
    /// Drive signals before `phi` is applied.
    pub signals: DriveSignals,
    /// rad
    pub phi: f64,
    pub phase_convention: PhaseConvention,
    /// s
    pub duration: f64,
    /// Sample period (s).
    pub dt: f64,
    pub friction: FrictionMode,
    pub sweep: SweepAxes,
    pub calibration: CalibrationSpec,
    pub gait: GaitSection,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let a = CALIBRATED_FA_AMPLITUDE;
        Self {
            params: RobotParams::default(),
            signals: DriveSignals {
                fa: SignalSpec::sine(1.0, a, a, 0.0),
                mu1: SignalSpec::square(1.0, 0.1, 1.0, 0.5, 0.0),
                mu2: SignalSpec::square(1.0, 0.1, 1.0, 0.5, 0.0),
            },
            phi: 0.4 * PI,
            phase_convention: PhaseConvention::FrictionPair,
            duration: 60.0,
            dt: DEFAULT_DT,
            friction: FrictionMode::SignOnly,
            sweep: SweepAxes::default(),
            calibration: CalibrationSpec::default(),
            gait: GaitSection::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Recursive object merge; anything that is not an object on both sides is replaced.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn prefixed(prefix: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { field, reason } => Error::InvalidParameter {
            field: format!("{prefix}.{field}"),
            reason,
        },
        other => other,
    }
}

fn check_list(name: &str, xs: &[f64], positive: bool) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::invalid(name, "must not be empty"));
    }
    for (i, &x) in xs.iter().enumerate() {
        let ok = x.is_finite() && (!positive || x > 0.0);
        if !ok {
            let need = if positive { "finite and > 0" } else { "finite" };
            return Err(Error::invalid(format!("{name}[{i}]"), format!("must be {need}, got {x}")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(text)?)
    }

    pub fn from_value(v: Value) -> Result<Self> {
        let cfg: Self = serde_json::from_value(v).map_err(|e| Error::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (or the defaults when `None`), applies `key=value`
    /// overrides and validates the result.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut v = serde_json::to_value(Self::default()).map_err(|e| Error::Parse(e.to_string()))?;
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let file: Value =
                serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
            merge(&mut v, file);
        }
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        Self::from_value(v)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| prefixed("params", e))?;
        self.signals.validate(&self.params).map_err(|e| prefixed("signals", e))?;
        if !self.phi.is_finite() {
            return Err(Error::invalid("phi", "must be finite"));
        }
        step_count(self.duration, self.dt)?;
        self.friction.validate()?;
        check_list("sweep.axial_freqs", &self.sweep.axial_freqs, true)?;
        check_list("sweep.friction_freqs", &self.sweep.friction_freqs, true)?;
        check_list("sweep.phases", &self.sweep.phases, false)?;
        check_list("sweep.mass_trials", &self.sweep.mass_trials, true)?;
        let c = &self.calibration;
        if !(c.amplitude_min > 0.0 && c.amplitude_min < c.amplitude_max && c.amplitude_max.is_finite()) {
            return Err(Error::invalid(
                "calibration.amplitude_min",
                "need 0 < amplitude_min < amplitude_max",
            ));
        }
        if !(c.coarse_step > 0.0 && c.resolution > 0.0 && c.resolution <= c.coarse_step) {
            return Err(Error::invalid(
                "calibration.resolution",
                "need 0 < resolution <= coarse_step",
            ));
        }
        if !(c.target_speed > 0.0 && c.target_speed.is_finite()) {
            return Err(Error::invalid("calibration.target_speed", "must be > 0"));
        }
        self.gait.schedule.validate().map_err(|e| prefixed("gait.schedule", e))?;
        self.gait.options.validate()
    }

    /// Drive signals with `phi` applied under the configured convention.
    pub fn drive(&self) -> DriveSignals {
        self.phase_convention.apply(&self.signals, self.phi)
    }
}

/// Sets a dotted `key=value` path inside a JSON document. The value is
/// parsed as JSON when possible and kept as a string otherwise; missing
/// objects along the path are created.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::invalid("--set", format!("expected key=value, got `{assignment}`")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::invalid("--set", format!("malformed key `{key}`")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| Error::invalid(key, format!("`{part}` is not an array index")))?;
                let len = items.len();
                items
                    .get_mut(idx)
                    .ok_or_else(|| Error::invalid(key, format!("index {idx} out of range ({len} items)")))?
            }
            other => {
                if !other.is_object() {
                    *other = Value::Object(Default::default());
                }
                let map = other.as_object_mut().expect("object");
                map.entry(part.to_string()).or_insert(Value::Null)
            }
        };
        if last {
            *node = value;
            return Ok(());
        }
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
    }
    Ok(())
}
