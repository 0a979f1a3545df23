//! Dense small-matrix utilities: matrix exponential, zero-order-hold
//! discretization, SVD-based numerical rank and column-space bases.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::ContinuousLti;

/// Default relative tolerance for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Squarings beyond this depth are treated as overflow.
const MAX_SQUARINGS: i32 = 64;

/// Sampled realization `x[n+1] = Ad x[n] + Bd u[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLti {
    pub ad: DMatrix<f64>,
    pub bd: DMatrix<f64>,
    pub dt: f64,
}

impl DiscreteLti {
    pub fn states(&self) -> usize {
        self.ad.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.bd.ncols()
    }
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^(M t)` by scaling and squaring around a truncated Taylor series.
///
/// The argument is scaled by `2^-s` until its 1-norm is at most 1/2, where
/// 18 Taylor terms are below double-precision roundoff.
pub fn matrix_exponential(m: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let x = m * t;
    let norm = norm1(&x);
    if !norm.is_finite() {
        return Err(Error::Overflow { norm });
    }
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    if squarings > MAX_SQUARINGS {
        return Err(Error::Overflow { norm });
    }
    let scaled = x * 2f64.powi(-squarings);

    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for j in 1..=18 {
        term = &term * &scaled / j as f64;
        result += &term;
        if norm1(&term) <= f64::EPSILON * norm1(&result) * 1e-3 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    if result.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow { norm });
    }
    Ok(result)
}

/// Zero-order-hold discretization through the exponential of the
/// augmented matrix `[[A, B], [0, 0]]`, which is valid for singular `A`.
pub fn zoh_discretize(sys: &ContinuousLti, dt: f64) -> Result<DiscreteLti> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("sample period must be > 0, got {dt}")));
    }
    let n = sys.a.nrows();
    let m = sys.b.ncols();
    if sys.b.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "B has {} rows, A is {n}x{n}",
            sys.b.nrows()
        )));
    }
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&sys.a);
    aug.view_mut((0, n), (n, m)).copy_from(&sys.b);
    let e = matrix_exponential(&aug, dt)?;
    Ok(DiscreteLti {
        ad: e.view((0, 0), (n, n)).into_owned(),
        bd: e.view((0, n), (n, m)).into_owned(),
        dt,
    })
}

/// Singular values with matching left singular vectors, sorted descending.
///
/// One-sided Jacobi on `Mᵀ`: right rotations orthogonalize the columns of
/// `Mᵀ`, and the accumulated rotation holds the left singular vectors of
/// `M`. Small singular values keep high relative accuracy.
pub fn left_svd(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let r = m.nrows();
    let mut g = m.transpose();
    let mut v = DMatrix::<f64>::identity(r, r);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..r {
            for q in p + 1..r {
                let alpha = g.column(p).norm_squared();
                let beta = g.column(q).norm_squared();
                let gamma = g.column(p).dot(&g.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut g, &mut v] {
                    for i in 0..mat.nrows() {
                        let (a, b) = (mat[(i, p)], mat[(i, q)]);
                        mat[(i, p)] = c * a - s * b;
                        mat[(i, q)] = s * a + c * b;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(f64, usize)> = (0..r).map(|j| (g.column(j).norm(), j)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));
    let sigma = order.iter().map(|&(s, _)| s).collect();
    let u = DMatrix::from_fn(r, r, |i, k| v[(i, order[k].1)]);
    (sigma, u)
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    left_svd(m).0
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    let largest = sv.first().copied().unwrap_or(0.0);
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * largest).count()
}

/// Orthonormal basis of the numerical column space, one column per vector.
pub fn column_space_basis(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let rows = m.nrows();
    let (sv, u) = left_svd(m);
    let largest = sv.first().copied().unwrap_or(0.0);
    if largest == 0.0 {
        return DMatrix::zeros(rows, 0);
    }
    let keep = sv.iter().filter(|&&s| s > rel_tol * largest).count();
    u.columns(0, keep).into_owned()
}

/// Orthogonal projector `Q Qᵀ` for an orthonormal basis `Q`.
pub fn projector(basis: &DMatrix<f64>) -> DMatrix<f64> {
    basis * basis.transpose()
}

/// Frobenius distance between the projectors of two subspaces given by
/// arbitrary (not necessarily orthonormal) spanning columns.
pub fn subspace_distance(a: &DMatrix<f64>, b: &DMatrix<f64>, rel_tol: f64) -> f64 {
    let pa = projector(&column_space_basis(a, rel_tol));
    let pb = projector(&column_space_basis(b, rel_tol));
    (pa - pb).norm()
}

/// Diagonal similarity balancing with power-of-two factors.
///
/// Returns `(D⁻¹ A D, diag(D))`. Powers of two keep the transform exact, so
/// rank and eigenstructure of the result are those of `A`.
pub fn balance(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let mut m = a.clone();
    let mut scale = DVector::from_element(n, 1.0);
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut row = 0.0;
            let mut col = 0.0;
            for j in 0..n {
                if j != i {
                    row += m[(i, j)].abs();
                    col += m[(j, i)].abs();
                }
            }
            if row == 0.0 || col == 0.0 {
                continue;
            }
            let total = row + col;
            let mut f = 1.0;
            let mut c = col;
            while c < row / RADIX {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            while c > row * RADIX {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + row) / f < 0.95 * total {
                converged = false;
                scale[i] *= f;
                m.row_mut(i).scale_mut(1.0 / f);
                m.column_mut(i).scale_mut(f);
            }
        }
        if converged {
            break;
        }
    }
    (m, scale)
}

/// Nearest power of two to `x > 0`; scaling by it is exact.
pub(crate) fn power_of_two_near(x: f64) -> f64 {
    if x > 0.0 && x.is_finite() {
        2f64.powi(x.log2().round() as i32)
    } else {
        1.0
    }
}
