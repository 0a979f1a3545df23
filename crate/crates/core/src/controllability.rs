//! Controllability matrices, controllable subspaces and the
//! center-of-mass consequence for the frictionless model.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{center_of_mass, ContinuousLti, RobotParams, StateVec};
use crate::numerics::{
    balance, column_space_basis, numerical_rank, power_of_two_near, DEFAULT_RANK_TOL,
};

/// Tolerance for declaring a basis vector CM-neutral.
pub const CM_LOCK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControllabilityReport {
    pub rank: usize,
    /// Orthonormal basis of the controllable subspace, one state per entry.
    pub basis: Vec<[f64; 4]>,
    /// Every reachable direction leaves the center of mass in place.
    pub cm_locked: bool,
    pub fully_controllable: bool,
}

impl ControllabilityReport {
    pub fn basis_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(4, self.basis.len(), |r, c| self.basis[c][r])
    }
}

/// `[B, AB, A²B, …, Aⁿ⁻¹B]`.
pub fn controllability_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || b.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let m = b.ncols();
    let mut out = DMatrix::zeros(n, n * m);
    let mut block = b.clone();
    for j in 0..n {
        out.view_mut((0, j * m), (n, m)).copy_from(&block);
        block = a * block;
    }
    Ok(out)
}

/// Controllability matrix of the balanced, norm-scaled pair.
///
/// With `Ã = D⁻¹AD / α` and `B̃ = D⁻¹B / β`, the result equals
/// `D⁻¹ [B, AB/α, A²B/α², A³B/α³] / β`, so its rank is that of the raw
/// matrix and its column space maps back through `D`. Entries stay O(1)
/// even when `k/m` spans many decades. Returns the matrix and `diag(D)`.
pub fn balanced_controllability_matrix(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    if !a.is_square() || b.nrows() != a.nrows() {
        return controllability_matrix(a, b).map(|m| (m, Vec::new()));
    }
    let (a_bal, d) = balance(a);
    let mut b_bal = b.clone();
    for (i, mut row) in b_bal.row_iter_mut().enumerate() {
        row /= d[i];
    }
    let a_scaled = &a_bal / power_of_two_near(a_bal.amax());
    let b_scaled = &b_bal / power_of_two_near(b_bal.amax());
    let ctrb = controllability_matrix(&a_scaled, &b_scaled)?;
    Ok((ctrb, d.iter().copied().collect()))
}

pub fn analyze(sys: &ContinuousLti, params: &RobotParams) -> Result<ControllabilityReport> {
    analyze_with_tol(sys, params, DEFAULT_RANK_TOL)
}

pub fn analyze_with_tol(
    sys: &ContinuousLti,
    params: &RobotParams,
    rel_tol: f64,
) -> Result<ControllabilityReport> {
    let (ctrb, d) = balanced_controllability_matrix(&sys.a, &sys.b)?;
    let rank = numerical_rank(&ctrb, rel_tol);
    let balanced_basis = column_space_basis(&ctrb, rel_tol);
    // back to physical coordinates, then re-orthonormalize
    let mut spanning = balanced_basis;
    for (i, mut row) in spanning.row_iter_mut().enumerate() {
        row *= d[i];
    }
    let basis = column_space_basis(&spanning, rel_tol);
    debug_assert_eq!(basis.ncols(), rank);

    let vectors: Vec<[f64; 4]> = basis
        .column_iter()
        .map(|c| [c[0], c[1], c[2], c[3]])
        .collect();
    let cm_locked = vectors.iter().all(|v| {
        let s = StateVec::from_slice(v);
        center_of_mass(&s, params).abs() <= CM_LOCK_TOL
    });
    Ok(ControllabilityReport {
        rank,
        basis: vectors,
        cm_locked,
        fully_controllable: rank == sys.a.nrows(),
    })
}
