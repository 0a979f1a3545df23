//! Physical parameters and closed-form equations of the two-mass crawler.
//!
//! The robot is reduced to two friction blocks (`m1` rear, `m2` front)
//! joined by an axial actuator modelled as a spring `k`, a damper `c` and a
//! pair of equal and opposite forces `f_a`. Positive `f_a` pushes `m1`
//! backwards and `m2` forwards along the body axis.

use nalgebra::{DMatrix, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pascals per psi.
pub const PA_PER_PSI: f64 = 6894.757;

/// Standard gravity used when no value is configured.
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Actuator diameter of the prototype (35 mm).
pub const ACTUATOR_DIAMETER_M: f64 = 0.035;

pub fn psi_to_pa(psi: f64) -> f64 {
    psi * PA_PER_PSI
}

pub fn pa_to_psi(pa: f64) -> f64 {
    pa / PA_PER_PSI
}

/// Cross-sectional area of a circular actuator of the given diameter.
pub fn circular_area(diameter: f64) -> f64 {
    std::f64::consts::PI * (diameter / 2.0).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotParams {
    /// Rear block mass (kg).
    pub m1: f64,
    /// Front block mass (kg).
    pub m2: f64,
    /// Axial stiffness (N/m).
    pub k: f64,
    /// Axial damping (N·s/m).
    pub c: f64,
    /// Gravitational acceleration (m/s²).
    pub g: f64,
    pub mu_lo_1: f64,
    pub mu_hi_1: f64,
    pub mu_lo_2: f64,
    pub mu_hi_2: f64,
    /// Axial actuator cross-section (m²).
    pub s_a: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            m1: 0.2,
            m2: 0.2,
            k: 200.0,
            c: 0.0,
            g: STANDARD_GRAVITY,
            mu_lo_1: 0.1,
            mu_hi_1: 1.0,
            mu_lo_2: 0.1,
            mu_hi_2: 1.0,
            s_a: circular_area(ACTUATOR_DIAMETER_M),
        }
    }
}

impl RobotParams {
    pub fn with_masses(self, m1: f64, m2: f64) -> Self {
        Self { m1, m2, ..self }
    }

    /// Checks every physical invariant, naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        fn finite(field: &str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must be finite, got {v}")))
            }
        }
        let all = [
            ("m1", self.m1),
            ("m2", self.m2),
            ("k", self.k),
            ("c", self.c),
            ("g", self.g),
            ("mu_lo_1", self.mu_lo_1),
            ("mu_hi_1", self.mu_hi_1),
            ("mu_lo_2", self.mu_lo_2),
            ("mu_hi_2", self.mu_hi_2),
            ("s_a", self.s_a),
        ];
        for (field, v) in all {
            finite(field, v)?;
        }
        for (field, v) in [("m1", self.m1), ("m2", self.m2), ("g", self.g), ("s_a", self.s_a)] {
            if v <= 0.0 {
                return Err(Error::invalid(field, format!("must be > 0, got {v}")));
            }
        }
        for (field, v) in [("k", self.k), ("c", self.c)] {
            if v < 0.0 {
                return Err(Error::invalid(field, format!("must be >= 0, got {v}")));
            }
        }
        for (lo_name, lo, hi_name, hi) in [
            ("mu_lo_1", self.mu_lo_1, "mu_hi_1", self.mu_hi_1),
            ("mu_lo_2", self.mu_lo_2, "mu_hi_2", self.mu_hi_2),
        ] {
            if lo <= 0.0 {
                return Err(Error::invalid(lo_name, format!("must be > 0, got {lo}")));
            }
            if hi <= lo {
                return Err(Error::invalid(
                    hi_name,
                    format!("must exceed {lo_name} ({lo}), got {hi}"),
                ));
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.m1 + self.m2
    }

    /// Normal force on `block`.
    pub fn weight(&self, block: Block) -> f64 {
        match block {
            Block::Rear => self.m1 * self.g,
            Block::Front => self.m2 * self.g,
        }
    }

    pub fn mu_bounds(&self, block: Block) -> (f64, f64) {
        match block {
            Block::Rear => (self.mu_lo_1, self.mu_hi_1),
            Block::Front => (self.mu_lo_2, self.mu_hi_2),
        }
    }
}

/// The two friction blocks. `Rear` is mass 1, `Front` is mass 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Rear,
    Front,
}

/// State ordered as `[x1, v1, x2, v2]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StateVec {
    pub x1: f64,
    pub v1: f64,
    pub x2: f64,
    pub v2: f64,
}

impl StateVec {
    pub const ZERO: StateVec = StateVec {
        x1: 0.0,
        v1: 0.0,
        x2: 0.0,
        v2: 0.0,
    };

    pub fn new(x1: f64, v1: f64, x2: f64, v2: f64) -> Self {
        Self { x1, v1, x2, v2 }
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.x1, self.v1, self.x2, self.v2)
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x1, self.v1, self.x2, self.v2]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.as_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn velocity(&self, block: Block) -> f64 {
        match block {
            Block::Rear => self.v1,
            Block::Front => self.v2,
        }
    }

    pub fn position(&self, block: Block) -> f64 {
        match block {
            Block::Rear => self.x1,
            Block::Front => self.x2,
        }
    }
}

impl From<Vector4<f64>> for StateVec {
    fn from(v: Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// Continuous realization `{A, B, C, D}` with `C = I` and `D = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousLti {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl ContinuousLti {
    fn with_input(a: DMatrix<f64>, b: DMatrix<f64>) -> Self {
        let inputs = b.ncols();
        Self {
            a,
            b,
            c: DMatrix::identity(4, 4),
            d: DMatrix::zeros(4, inputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
}

fn state_matrix(p: &RobotParams) -> DMatrix<f64> {
    let (m1, m2, k, c) = (p.m1, p.m2, p.k, p.c);
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
        0.0,     1.0,     0.0,      0.0,
        -k / m1, -c / m1, k / m1,   c / m1,
        0.0,     0.0,     0.0,      1.0,
        k / m2,  c / m2,  -k / m2,  -c / m2,
    ]);
    a
}

/// Frictionless model driven only by the axial force.
pub fn build_siso(params: &RobotParams) -> Result<ContinuousLti> {
    params.validate()?;
    let b = DMatrix::from_column_slice(4, 1, &[0.0, -1.0 / params.m1, 0.0, 1.0 / params.m2]);
    Ok(ContinuousLti::with_input(state_matrix(params), b))
}

/// Model with inputs `[f_a, f1, f2]`; friction enters through negative entries.
pub fn build_mimo(params: &RobotParams) -> Result<ContinuousLti> {
    params.validate()?;
    let (m1, m2) = (params.m1, params.m2);
    #[rustfmt::skip]
    let b = DMatrix::from_row_slice(4, 3, &[
        0.0,       0.0,       0.0,
        -1.0 / m1, -1.0 / m1, 0.0,
        0.0,       0.0,       0.0,
        1.0 / m2,  0.0,       -1.0 / m2,
    ]);
    Ok(ContinuousLti::with_input(state_matrix(params), b))
}

/// Axial force from gauge pressure (Pa) acting on area `s_a` (m²).
pub fn axial_force(p_a: f64, s_a: f64) -> Result<f64> {
    if !(s_a > 0.0) {
        return Err(Error::invalid("s_a", format!("must be > 0, got {s_a}")));
    }
    if p_a < 0.0 {
        return Err(Error::NegativePressure(p_a));
    }
    Ok(s_a * p_a)
}

/// Kinetic friction `sign(v)·mu·m·g`, with `sign(0) = 0`.
///
/// The value carries the sign of `v`; the plant's negative input entries
/// turn it into a force opposing the motion.
pub fn friction_force(v: f64, mu: f64, m: f64, g: f64) -> f64 {
    debug_assert!(mu >= 0.0 && m > 0.0 && g > 0.0);
    signum0(v) * mu * m * g
}

pub(crate) fn signum0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn center_of_mass(state: &StateVec, params: &RobotParams) -> f64 {
    (params.m1 * state.x1 + params.m2 * state.x2) / (params.m1 + params.m2)
}

/// The reachable directions of the frictionless model:
/// `chi1 = [1, 0, -m1/m2, 0]`, `chi2 = [0, 1, 0, -m1/m2]`.
pub fn frictionless_reachable_directions(params: &RobotParams) -> [Vector4<f64>; 2] {
    let r = params.m1 / params.m2;
    [Vector4::new(1.0, 0.0, -r, 0.0), Vector4::new(0.0, 1.0, 0.0, -r)]
}
