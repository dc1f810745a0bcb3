//! Small dense linear-algebra helpers shared by the phase-space modules.

use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Matrices handed to the Schur-complement solver above this condition
/// number are rejected instead of inverted.
pub const MAX_CONDITION: f64 = 1e12;

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Rejects matrices whose asymmetry exceeds `tol` relative to their scale.
pub fn check_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let asym = max_asymmetry(m);
    let scale = m.amax().max(1.0);
    if asym > tol * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Real symmetric embedding [[A, −B], [B, A]] of a Hermitian H = A + iB.
///
/// The embedding is a *-homomorphism, so spectral functions commute with it
/// and every eigenvalue of H appears twice. nalgebra's complex Hermitian
/// eigensolver can return NaN on sparse rank-deficient input, the real one
/// does not.
fn herm_embed(h: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = h.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Symmetric eigendecomposition that survives nalgebra's NaN failure on
/// very sparse input: on failure the matrix is rotated by a fixed dense
/// Householder reflector Q, decomposed, and the eigenvectors mapped back.
pub fn sym_eigen(m: DMatrix<f64>) -> SymmetricEigen<f64, Dyn> {
    let eig = m.clone().symmetric_eigen();
    let finite = |e: &SymmetricEigen<f64, Dyn>| {
        e.eigenvalues.iter().chain(e.eigenvectors.iter()).all(|x| x.is_finite())
    };
    if finite(&eig) {
        return eig;
    }
    let n = m.nrows();
    let v = DVector::from_fn(n, |i, _| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_75).fract());
    let q = DMatrix::identity(n, n) - &v * v.transpose() * (2.0 / v.norm_squared());
    let mut rot = (&q * &m * &q).symmetric_eigen();
    rot.eigenvectors = &q * rot.eigenvectors;
    debug_assert!(finite(&rot));
    rot
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn herm_eigenvalues(h: &DMatrix<Complex64>) -> Vec<f64> {
    let h = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = sym_eigen(herm_embed(&h)).eigenvalues.iter().cloned().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev.into_iter().step_by(2).collect()
}

/// Smallest eigenvalue of a complex Hermitian matrix.
pub fn min_eigenvalue_herm(m: &DMatrix<Complex64>) -> f64 {
    herm_eigenvalues(m).first().cloned().unwrap_or(f64::INFINITY)
}

/// Square root of a Hermitian PSD matrix together with the minimum eigenvalue
/// seen. Eigenvalues below 1e-14 of the largest are treated as round-off and
/// clamped to zero, since their square roots would otherwise dominate.
pub fn herm_sqrt_psd(h: &DMatrix<Complex64>) -> (DMatrix<Complex64>, f64) {
    let n = h.nrows();
    let h = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym_eigen(herm_embed(&h));
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let sq = eig
        .eigenvalues
        .map(|l| if l > 1e-14 * max { l.sqrt() } else { 0.0 });
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&sq) * eig.eigenvectors.transpose();
    let out = DMatrix::from_fn(n, n, |i, j| Complex64::new(root[(i, j)], root[(i + n, j)]));
    (out, min)
}

/// Low-rank factor ρ ≈ Σ_k l_k l_k† of a Hermitian PSD matrix by pivoted
/// Cholesky; stops once the largest residual diagonal entry drops below
/// `rel_tol` times the trace.
pub fn pivoted_cholesky(rho: &DMatrix<Complex64>, rel_tol: f64) -> Vec<DVector<Complex64>> {
    let n = rho.nrows();
    let mut diag: Vec<f64> = (0..n).map(|i| rho[(i, i)].re).collect();
    let tol = rel_tol * diag.iter().sum::<f64>().abs();
    let mut factors: Vec<DVector<Complex64>> = Vec::new();
    while factors.len() < n {
        let (p, &dp) = diag
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        if !(dp > tol) {
            break;
        }
        let mut l = rho.column(p).into_owned();
        for f in &factors {
            let c = f[p].conj();
            l.axpy(-c, f, Complex64::new(1.0, 0.0));
        }
        l /= Complex64::new(dp.sqrt(), 0.0);
        for (i, d) in diag.iter_mut().enumerate() {
            *d -= l[i].norm_sqr();
        }
        diag[p] = 0.0;
        factors.push(l);
    }
    factors
}

/// 2-norm condition number from the singular values.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of a symmetric matrix with an explicit conditioning check.
///
/// Uses a pivoted LU factorisation; the condition number is computed first so
/// that a near-singular system is reported rather than silently inverted.
pub fn checked_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let condition = condition_number(m);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::IllConditioned { condition });
    }
    m.clone()
        .lu()
        .try_inverse()
        .ok_or(Error::IllConditioned { condition })
}

/// Block-diagonal direct sum.
pub fn direct_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = DMatrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

pub fn dot(a: &[f64], b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// rᵀ M r for a slice r.
pub fn quad_form(m: &DMatrix<f64>, r: &[f64]) -> f64 {
    let n = r.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += m[(i, j)] * r[j];
        }
        acc += r[i] * row;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_well_conditioned_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let inv = checked_inverse(&m).unwrap();
        let id = &m * inv;
        assert!((id - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            checked_inverse(&m),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn hermitian_helpers_on_rank_one_sparse_matrix() {
        let n = 30;
        let mut v = DVector::zeros(n);
        for k in 0..6 {
            v[k * 5] = Complex64::new(0.5f64.powi(k as i32), 0.1 * k as f64);
        }
        let rho = &v * v.adjoint();
        let norm2 = v.norm_squared();
        let ev = herm_eigenvalues(&rho);
        assert!((ev[n - 1] - norm2).abs() < 1e-12);
        assert!(ev[0].abs() < 1e-12);
        let (root, _) = herm_sqrt_psd(&rho);
        let e = (&root * &root - &rho).camax();
        assert!(e < 1e-12, "{e}");
        let f = pivoted_cholesky(&rho, 1e-16);
        assert_eq!(f.len(), 1);
        assert!((&f[0] * f[0].adjoint() - &rho).camax() < 1e-14);
    }

    #[test]
    fn quad_form_matches_matrix_product() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let r = [0.3, -1.2];
        let v = DVector::from_column_slice(&r);
        let expect = (v.transpose() * &m * &v)[(0, 0)];
        assert!((quad_form(&m, &r) - expect).abs() < 1e-15);
    }
}
