use serde::{Deserialize, Serialize};

use crate::model::{psi_to_pa, Block, RobotParams};

use super::schedule::{Actuator, GaitSchedule};

/// Extremal-actuator pressure at which the casing grips the ground.
pub const ANCHOR_THRESHOLD_PSI: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorDirection {
    /// Central actuator expanding: the rear block must hold.
    Inflating,
    /// Central actuator contracting: the front block must hold.
    Deflating,
}

/// Whether the anchored block's friction cap absorbs the axial force while
/// the free block's cap does not.
pub fn check_anchoring(fa: f64, f1_cap: f64, f2_cap: f64, direction: AnchorDirection) -> bool {
    let fa = fa.abs();
    match direction {
        AnchorDirection::Inflating => f1_cap >= fa && fa > f2_cap,
        AnchorDirection::Deflating => f2_cap >= fa && fa > f1_cap,
    }
}

/// Friction coefficient selected by an extremal actuator's pressure.
pub fn friction_for_pressure(params: &RobotParams, block: Block, psi: f64, threshold_psi: f64) -> f64 {
    let (lo, hi) = params.mu_bounds(block);
    if psi >= threshold_psi {
        hi
    } else {
        lo
    }
}

/// Reference inputs `(fa, mu1, mu2)` at time `t` of the stride.
pub fn schedule_to_plant_inputs(sched: &GaitSchedule, params: &RobotParams, t: f64) -> (f64, f64, f64) {
    let ph = &sched.phases[sched.phase_index(t)];
    (
        params.s_a * psi_to_pa(ph.central_psi),
        friction_for_pressure(params, Block::Rear, ph.rear_psi, ANCHOR_THRESHOLD_PSI),
        friction_for_pressure(params, Block::Front, ph.front_psi, ANCHOR_THRESHOLD_PSI),
    )
}

/// Outcome of the anchoring test for one transition phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchoringCheck {
    pub phase: usize,
    pub direction: AnchorDirection,
    pub fa: f64,
    pub f1_cap: f64,
    pub f2_cap: f64,
    pub feasible: bool,
}

/// Tests the expansion phase (index 1) and the contraction phase (index 3).
///
/// The axial force is the larger of the central pressures at either end of
/// the transition, and each cap follows the extremal pressure held during
/// the phase.
pub fn schedule_anchoring(
    sched: &GaitSchedule,
    params: &RobotParams,
    threshold_psi: f64,
) -> Vec<AnchoringCheck> {
    let n = sched.phases.len();
    [(1, AnchorDirection::Inflating), (3, AnchorDirection::Deflating)]
        .into_iter()
        .filter(|&(i, _)| i < n)
        .map(|(i, direction)| {
            let ph = &sched.phases[i];
            let prev = &sched.phases[(i + n - 1) % n];
            let psi = ph.pressure(Actuator::Central).max(prev.pressure(Actuator::Central));
            let fa = params.s_a * psi_to_pa(psi);
            let f1_cap = friction_for_pressure(params, Block::Rear, ph.rear_psi, threshold_psi)
                * params.weight(Block::Rear);
            let f2_cap = friction_for_pressure(params, Block::Front, ph.front_psi, threshold_psi)
                * params.weight(Block::Front);
            AnchoringCheck {
                phase: i,
                direction,
                fa,
                f1_cap,
                f2_cap,
                feasible: check_anchoring(fa, f1_cap, f2_cap, direction),
            }
        })
        .collect()
}
