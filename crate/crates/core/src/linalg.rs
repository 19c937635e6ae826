//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD, QR};

/// Relative singular-value cutoff used for every rank decision.
pub const RANK_RTOL: f64 = 1e-12;

/// Minimum-norm least-squares solution of `a x ≈ b`.
///
/// Tall systems go through a Householder QR first so the SVD only touches the
/// small triangular factor.
pub fn lstsq_min_norm(a: DMatrix<f64>, b: DVector<f64>) -> DVector<f64> {
    let (m, n) = a.shape();
    if n == 0 {
        return DVector::zeros(0);
    }
    if m >= n {
        let qr = QR::new(a);
        let mut qtb = b;
        qr.q_tr_mul(&mut qtb);
        let r = qr.r();
        let rhs = qtb.rows(0, n).into_owned();
        svd_solve(r, rhs)
    } else {
        svd_solve(a, b)
    }
}

fn svd_solve(a: DMatrix<f64>, b: DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let svd = SVD::new(a, true, true);
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return DVector::zeros(n);
    }
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let cutoff = RANK_RTOL * smax;
    let mut x = DVector::zeros(n);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let coef = u.column(k).dot(&b) / s;
            x += vt.row(k).transpose() * coef;
        }
    }
    x
}

/// Orthonormal basis of the column space of `z`, rank decided by [`RANK_RTOL`].
pub fn column_basis(z: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = z.shape();
    if m == 0 || n == 0 {
        return DMatrix::zeros(m, 0);
    }
    let svd = SVD::new(z.clone(), true, false);
    let smax = svd.singular_values.max();
    let u = svd.u.expect("u requested");
    if smax <= 0.0 {
        return DMatrix::zeros(m, 0);
    }
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > RANK_RTOL * smax)
        .map(|(k, _)| k)
        .collect();
    DMatrix::from_fn(m, keep.len(), |r, c| u[(r, keep[c])])
}

/// Largest and smallest eigenvalue of a symmetric matrix, clamped at zero.
pub fn sym_extreme_eigenvalues(g: DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(g);
    let hi = eig.eigenvalues.max().max(0.0);
    let lo = eig.eigenvalues.min().max(0.0);
    (hi, lo)
}

/// A unit vector spanning (numerically) the null space of a wide matrix.
///
/// The matrix is padded with zero rows to square form so the full right
/// singular basis is available; the vector for the smallest singular value is
/// returned.
pub fn null_vector(a: &DMatrix<f64>) -> DVector<f64> {
    let (m, n) = a.shape();
    let rows = m.max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.rows_mut(0, m).copy_from(a);
    let svd = SVD::new(padded, false, true);
    let vt = svd.v_t.expect("v_t requested");
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    vt.row(k).transpose()
}
