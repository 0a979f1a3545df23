//! The sampled two-mass plant closed through friction feedback.

use nalgebra::{Matrix2, Matrix4, Matrix4x3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_mimo, signum0, RobotParams, StateVec};
use crate::numerics::{zoh_discretize, DiscreteLti};

/// States beyond this magnitude abort the run.
pub const INSTABILITY_BOUND: f64 = 1e6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrictionMode {
    /// `f = sign(v)·μ·m·g` evaluated at each sample.
    #[default]
    SignOnly,
    /// Stick-slip: velocities inside `±eps_v` are zeroed and static friction
    /// (up to `mu_static_scale·μ·m·g`) holds the block at rest.
    Karnopp { eps_v: f64, mu_static_scale: f64 },
}

impl FrictionMode {
    pub fn karnopp() -> Self {
        FrictionMode::Karnopp {
            eps_v: 1e-4,
            mu_static_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let FrictionMode::Karnopp {
            eps_v,
            mu_static_scale,
        } = *self
        {
            if !(eps_v > 0.0 && eps_v.is_finite()) {
                return Err(Error::invalid("friction.eps_v", format!("must be > 0, got {eps_v}")));
            }
            if !(mu_static_scale > 0.0 && mu_static_scale.is_finite()) {
                return Err(Error::invalid(
                    "friction.mu_static_scale",
                    format!("must be > 0, got {mu_static_scale}"),
                ));
            }
        }
        Ok(())
    }
}

/// Inputs held over one sample period.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AppliedInput {
    pub fa: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub f1: f64,
    pub f2: f64,
}

impl AppliedInput {
    fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.fa, self.f1, self.f2)
    }
}

/// `½m₁v₁² + ½m₂v₂² + ½k(x₂ − x₁)²`
pub fn mechanical_energy(s: &StateVec, p: &RobotParams) -> f64 {
    0.5 * p.m1 * s.v1 * s.v1 + 0.5 * p.m2 * s.v2 * s.v2 + 0.5 * p.k * (s.x2 - s.x1).powi(2)
}

/// One `x[n+1] = Ad x[n] + Bd u[n]` update.
pub fn step(d: &DiscreteLti, x: &StateVec, u: &[f64]) -> Result<StateVec> {
    if d.ad.nrows() != 4 || u.len() != d.bd.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "input has {} entries, Bd has {} columns",
            u.len(),
            d.bd.ncols()
        )));
    }
    let xv = nalgebra::DVector::from_row_slice(&x.as_array());
    let uv = nalgebra::DVector::from_row_slice(u);
    let next = &d.ad * xv + &d.bd * uv;
    Ok(StateVec::from_slice(next.as_slice()))
}

/// Stateful stepper for the friction-fed plant of inputs `[f_a, f1, f2]`.
#[derive(Debug, Clone)]
pub struct FrictionPlant {
    params: RobotParams,
    mode: FrictionMode,
    dt: f64,
    ad: Matrix4<f64>,
    bd: Matrix4x3<f64>,
    state: StateVec,
    step_index: usize,
    #[cfg_attr(not(debug_assertions), allow(dead_code))]
    energy_ref: Option<f64>,
}

impl FrictionPlant {
    pub fn new(params: RobotParams, dt: f64, mode: FrictionMode) -> Result<Self> {
        mode.validate()?;
        let d = zoh_discretize(&build_mimo(&params)?, dt)?;
        Ok(Self {
            params,
            mode,
            dt,
            ad: Matrix4::from_iterator(d.ad.iter().copied()),
            bd: Matrix4x3::from_iterator(d.bd.iter().copied()),
            state: StateVec::ZERO,
            step_index: 0,
            energy_ref: None,
        })
    }

    pub fn with_state(mut self, state: StateVec) -> Self {
        self.state = state;
        self
    }

    pub fn state(&self) -> StateVec {
        self.state
    }

    pub fn params(&self) -> &RobotParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Resolves friction for the current sample and advances one period.
    ///
    /// Returns the state the update started from (after any stiction
    /// clamping) together with the inputs applied over the period.
    pub fn advance(&mut self, fa: f64, mu1: f64, mu2: f64) -> Result<(StateVec, AppliedInput)> {
        let p = self.params;
        let caps = Vector2::new(mu1 * p.m1 * p.g, mu2 * p.m2 * p.g);
        let (current, f, stuck) = match self.mode {
            FrictionMode::SignOnly => {
                let s = self.state;
                let f = Vector2::new(signum0(s.v1) * caps[0], signum0(s.v2) * caps[1]);
                (s, f, [false; 2])
            }
            FrictionMode::Karnopp {
                eps_v,
                mu_static_scale,
            } => {
                let mut s = self.state;
                if s.v1.abs() < eps_v {
                    s.v1 = 0.0;
                }
                if s.v2.abs() < eps_v {
                    s.v2 = 0.0;
                }
                let (f, stuck) = self.stick_slip_friction(&s, fa, caps, mu_static_scale);
                (s, f, stuck)
            }
        };
        let applied = AppliedInput {
            fa,
            mu1,
            mu2,
            f1: f[0],
            f2: f[1],
        };
        debug_assert!(
            applied.f1 * current.v1 >= 0.0 && applied.f2 * current.v2 >= 0.0,
            "friction must oppose motion: {applied:?} at {current:?}"
        );

        let mut next = StateVec::from(self.ad * current.to_vector() + self.bd * applied.vector());
        if let FrictionMode::Karnopp { eps_v, .. } = self.mode {
            for (i, (v0, v)) in [(current.v1, &mut next.v1), (current.v2, &mut next.v2)]
                .into_iter()
                .enumerate()
            {
                // a sliding block whose velocity crossed zero stopped inside
                // the period; breakaway is decided from rest on the next step
                let reversed = !stuck[i] && v0 != 0.0 && signum0(*v) != signum0(v0);
                if reversed || (stuck[i] && v.abs() < eps_v) {
                    *v = 0.0;
                }
            }
            self.audit_energy(&current, &next, fa);
        }

        let magnitude = next.max_abs();
        if !(magnitude <= INSTABILITY_BOUND) {
            return Err(Error::Instability {
                step: self.step_index,
                magnitude,
                bound: INSTABILITY_BOUND,
            });
        }
        self.state = next;
        self.step_index += 1;
        Ok((current, applied))
    }

    /// Friction values and the stuck flags for a Karnopp step.
    ///
    /// Blocks at rest, or whose sliding friction would carry the velocity
    /// through zero within the period, are candidates for sticking. For
    /// those the friction that ends the period at zero velocity is solved
    /// for jointly; a candidate whose required force exceeds its cap (or
    /// would have to push along its motion) slides instead.
    fn stick_slip_friction(
        &self,
        s: &StateVec,
        fa: f64,
        caps: Vector2<f64>,
        static_scale: f64,
    ) -> (Vector2<f64>, [bool; 2]) {
        let x = s.to_vector();
        let free = self.ad * x + self.bd.column(0) * fa;
        let r = Vector2::new(free[1], free[3]);
        let m = Matrix2::new(
            self.bd[(1, 1)],
            self.bd[(1, 2)],
            self.bd[(3, 1)],
            self.bd[(3, 2)],
        );
        let v = Vector2::new(s.v1, s.v2);

        let mut f = Vector2::new(signum0(v[0]) * caps[0], signum0(v[1]) * caps[1]);
        let mut stuck = [false; 2];
        for i in 0..2 {
            if v[i] == 0.0 {
                stuck[i] = true;
            } else {
                let predicted = r[i] + (m * f)[i];
                stuck[i] = signum0(predicted) != signum0(v[i]);
            }
        }

        for _ in 0..3 {
            // sliding blocks at rest move the way the other forces push them
            for i in 0..2 {
                if !stuck[i] && v[i] == 0.0 {
                    let j = 1 - i;
                    let push = r[i] + m[(i, j)] * f[j];
                    f[i] = signum0(push) * caps[i];
                }
            }
            let solved = match (stuck[0], stuck[1]) {
                (true, true) => m.try_inverse().map(|inv| -(inv * r)),
                (true, false) => Some(Vector2::new(-(r[0] + m[(0, 1)] * f[1]) / m[(0, 0)], f[1])),
                (false, true) => Some(Vector2::new(f[0], -(r[1] + m[(1, 0)] * f[0]) / m[(1, 1)])),
                (false, false) => Some(f),
            };
            let Some(candidate) = solved else { break };

            let mut worst: Option<(usize, f64)> = None;
            for i in 0..2 {
                if !stuck[i] {
                    continue;
                }
                let limit = if v[i] == 0.0 { static_scale * caps[i] } else { caps[i] };
                let wrong_way = v[i] != 0.0 && candidate[i] * v[i] < 0.0;
                let excess = candidate[i].abs() / limit.max(f64::MIN_POSITIVE);
                if wrong_way || excess > 1.0 {
                    let score = if wrong_way { f64::INFINITY } else { excess };
                    if worst.is_none_or(|(_, w)| score > w) {
                        worst = Some((i, score));
                    }
                }
            }
            match worst {
                None => {
                    f = candidate;
                    break;
                }
                Some((i, _)) => {
                    stuck[i] = false;
                    if v[i] != 0.0 {
                        f[i] = signum0(v[i]) * caps[i];
                    }
                }
            }
        }
        for i in 0..2 {
            if !stuck[i] {
                let kinetic = if v[i] != 0.0 {
                    signum0(v[i]) * caps[i]
                } else {
                    let j = 1 - i;
                    signum0(r[i] + m[(i, j)] * f[j]) * caps[i]
                };
                f[i] = kinetic;
            }
        }
        (f, stuck)
    }

    #[cfg(debug_assertions)]
    fn audit_energy(&mut self, current: &StateVec, next: &StateVec, fa: f64) {
        if fa != 0.0 {
            self.energy_ref = None;
            return;
        }
        let e0 = *self
            .energy_ref
            .get_or_insert_with(|| mechanical_energy(current, &self.params));
        let before = mechanical_energy(current, &self.params);
        let after = mechanical_energy(next, &self.params);
        debug_assert!(
            after <= before + 1e-6 * e0 + f64::EPSILON * before,
            "energy grew without axial drive: {before} -> {after} (E0 = {e0})"
        );
    }

    #[cfg(not(debug_assertions))]
    fn audit_energy(&mut self, _: &StateVec, _: &StateVec, _: f64) {}
}
