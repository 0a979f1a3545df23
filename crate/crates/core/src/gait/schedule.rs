use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pressure on every actuator during one phase of a stride (gauge psi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitPhase {
    pub duration_s: f64,
    pub rear_psi: f64,
    pub central_psi: f64,
    pub front_psi: f64,
}

impl GaitPhase {
    pub fn pressure(&self, a: Actuator) -> f64 {
        match a {
            Actuator::Rear => self.rear_psi,
            Actuator::Central => self.central_psi,
            Actuator::Front => self.front_psi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actuator {
    Rear,
    Central,
    Front,
}

impl Actuator {
    pub const ALL: [Actuator; 3] = [Actuator::Rear, Actuator::Central, Actuator::Front];

    pub fn name(self) -> &'static str {
        match self {
            Actuator::Rear => "rear",
            Actuator::Central => "central",
            Actuator::Front => "front",
        }
    }
}

/// The four-phase stride.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitSchedule {
    pub phases: Vec<GaitPhase>,
}

impl Default for GaitSchedule {
    /// Reference pressures of the physical prototype, 1.6 s protrusion
    /// and 2.4 s stance.
    fn default() -> Self {
        Self::four_phase(0.8, 1.6, 0.8, 0.8)
    }
}

impl GaitSchedule {
    pub const PHASES: usize = 4;

    /// Prototype reference pressures with the given phase durations.
    pub fn four_phase(d1: f64, d2: f64, d3: f64, d4: f64) -> Self {
        let ph = |duration_s, rear_psi, central_psi, front_psi| GaitPhase {
            duration_s,
            rear_psi,
            central_psi,
            front_psi,
        };
        Self {
            phases: vec![
                ph(d1, 1.2, 0.0, 0.0),
                ph(d2, 1.2, 3.0, 0.0),
                ph(d3, 1.2, 3.0, 1.2),
                ph(d4, 0.0, 0.0, 1.2),
            ],
        }
    }

    /// Same timing with every pressure at zero.
    pub fn deflated(&self) -> Self {
        Self {
            phases: self
                .phases
                .iter()
                .map(|p| GaitPhase {
                    duration_s: p.duration_s,
                    rear_psi: 0.0,
                    central_psi: 0.0,
                    front_psi: 0.0,
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.phases.len() != Self::PHASES {
            return Err(Error::invalid(
                "phases",
                format!("expected {} phases, got {}", Self::PHASES, self.phases.len()),
            ));
        }
        for (i, p) in self.phases.iter().enumerate() {
            if !(p.duration_s > 0.0 && p.duration_s.is_finite()) {
                return Err(Error::invalid(
                    format!("phases[{i}].duration_s"),
                    format!("must be > 0, got {}", p.duration_s),
                ));
            }
            for a in Actuator::ALL {
                let v = p.pressure(a);
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::invalid(
                        format!("phases[{i}].{}_psi", a.name()),
                        format!("must be a finite gauge pressure >= 0, got {v}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn stride_period(&self) -> f64 {
        self.phases.iter().map(|p| p.duration_s).sum()
    }

    /// Forward-motion interval: the central actuator's expansion phase.
    pub fn protrusion_time(&self) -> f64 {
        self.phases[1].duration_s
    }

    /// Anchored recovery: the remaining three phases.
    pub fn stance_time(&self) -> f64 {
        self.stride_period() - self.protrusion_time()
    }

    /// Phase index active at time `t`, wrapped to one stride.
    pub fn phase_index(&self, t: f64) -> usize {
        let tau = t.rem_euclid(self.stride_period());
        let mut end = 0.0;
        for (i, p) in self.phases.iter().enumerate() {
            end += p.duration_s;
            if tau < end {
                return i;
            }
        }
        self.phases.len() - 1
    }

    /// Phase lengths in whole sample periods.
    pub fn phase_steps(&self, dt: f64) -> Result<Vec<usize>> {
        self.phases
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let n = (p.duration_s / dt).round();
                if n < 1.0 || (n * dt - p.duration_s).abs() > 1e-9 * p.duration_s {
                    Err(Error::invalid(
                        format!("phases[{i}].duration_s"),
                        format!("{} s is not a whole number of {dt} s periods", p.duration_s),
                    ))
                } else {
                    Ok(n as usize)
                }
            })
            .collect()
    }
}
