//! Phase-space representation of Gaussian states and maps.
//!
//! Quadratures are ordered (X1, P1, ..., Xm, Pm) with X = (a + a†)/√2 and
//! P = i(a† − a)/√2. The covariance matrix is Γ_jk = 2 Re tr[(Q_j − d_j)(Q_k − d_k) ρ],
//! so the vacuum has Γ = I and χ(r) = exp(i r·d − rᵀΓr/4).

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance on the minimum eigenvalue of Γ + iΩ.
pub const PHYSICALITY_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-9;
const SYMPLECTIC_TOL: f64 = 1e-9;

/// Standard symplectic form ⊕_j [[0, 1], [−1, 0]].
pub fn symplectic_form(m: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * m, 2 * m);
    for j in 0..m {
        omega[(2 * j, 2 * j + 1)] = 1.0;
        omega[(2 * j + 1, 2 * j)] = -1.0;
    }
    omega
}

/// Diagonal sign matrix 1_A ⊕ T_B implementing partial transposition of the
/// listed modes at the covariance level (P → −P on those modes).
pub fn pt_sign_matrix(m: usize, b_modes: &[usize]) -> Result<DMatrix<f64>> {
    let mut lam = DMatrix::identity(2 * m, 2 * m);
    for &j in b_modes {
        if j >= m {
            return Err(Error::IndexOutOfRange { index: j, len: m });
        }
        lam[(2 * j + 1, 2 * j + 1)] = -1.0;
    }
    Ok(lam)
}

/// Partial transpose of a covariance matrix on the listed modes.
pub fn partial_transpose_cov(gamma: &DMatrix<f64>, b_modes: &[usize]) -> Result<DMatrix<f64>> {
    linalg::check_symmetric(gamma, SYMMETRY_TOL)?;
    if !gamma.nrows().is_multiple_of(2) {
        return Err(Error::DimensionMismatch {
            expected: gamma.nrows() + 1,
            found: gamma.nrows(),
        });
    }
    let lam = pt_sign_matrix(gamma.nrows() / 2, b_modes)?;
    Ok(&lam * gamma * &lam)
}

/// Minimum eigenvalue of Γ + iΩ; non-negative for physical covariance matrices.
pub fn physicality_margin(gamma: &DMatrix<f64>) -> f64 {
    let m = gamma.nrows() / 2;
    let omega = symplectic_form(m);
    let h = DMatrix::from_fn(2 * m, 2 * m, |i, j| {
        Complex64::new(gamma[(i, j)], omega[(i, j)])
    });
    linalg::min_eigenvalue_herm(&h)
}

pub fn is_physical(gamma: &DMatrix<f64>) -> bool {
    physicality_margin(gamma) >= -PHYSICALITY_TOL
}

/// Gaussian characteristic function for given first moments and covariance.
pub fn gaussian_charfun_raw(d: Option<&DVector<f64>>, gamma: &DMatrix<f64>, r: &[f64]) -> Complex64 {
    let phase = d.map_or(0.0, |d| linalg::dot(r, d));
    let decay = -linalg::quad_form(gamma, r) / 4.0;
    Complex64::from_polar(decay.exp(), phase)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    d: DVector<f64>,
    gamma: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(d: DVector<f64>, gamma: DMatrix<f64>) -> Result<Self> {
        if gamma.nrows() == 0 || !gamma.nrows().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: gamma.nrows(),
            });
        }
        if d.len() != gamma.nrows() {
            return Err(Error::DimensionMismatch {
                expected: gamma.nrows(),
                found: d.len(),
            });
        }
        linalg::check_symmetric(&gamma, SYMMETRY_TOL)?;
        let gamma = linalg::symmetrize(&gamma);
        let margin = physicality_margin(&gamma);
        if margin < -PHYSICALITY_TOL {
            return Err(Error::Unphysical {
                min_eigenvalue: margin,
            });
        }
        Ok(Self { d, gamma })
    }

    pub fn centered(gamma: DMatrix<f64>) -> Result<Self> {
        let n = gamma.nrows();
        Self::new(DVector::zeros(n), gamma)
    }

    /// m-mode vacuum: d = 0, Γ = I.
    pub fn vacuum(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("modes", 0.0, "need at least one mode"));
        }
        Ok(Self {
            d: DVector::zeros(2 * m),
            gamma: DMatrix::identity(2 * m, 2 * m),
        })
    }

    /// Product of identical thermal states with mean photon number n_th.
    pub fn thermal(m: usize, n_th: f64) -> Result<Self> {
        if !(n_th >= 0.0) {
            return Err(Error::param("n_th", n_th, "must be non-negative"));
        }
        let mut s = Self::vacuum(m)?;
        s.gamma *= 1.0 + 2.0 * n_th;
        Ok(s)
    }

    pub fn modes(&self) -> usize {
        self.d.len() / 2
    }

    pub fn first_moments(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn charfun(&self, r: &[f64]) -> Result<Complex64> {
        if r.len() != self.d.len() {
            return Err(Error::DimensionMismatch {
                expected: self.d.len(),
                found: r.len(),
            });
        }
        Ok(gaussian_charfun_raw(Some(&self.d), &self.gamma, r))
    }

    pub fn physicality_margin(&self) -> f64 {
        physicality_margin(&self.gamma)
    }
}

/// Affine phase-space action Q ↦ M Q + shift of a Gaussian unitary.
///
/// States transform as d ↦ M d + shift, Γ ↦ M Γ Mᵀ.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMap {
    matrix: DMatrix<f64>,
    shift: DVector<f64>,
}

impl SymplecticMap {
    pub fn new(matrix: DMatrix<f64>, shift: DVector<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || !n.is_multiple_of(2) || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n.max(2),
                found: matrix.ncols(),
            });
        }
        if shift.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: shift.len(),
            });
        }
        let omega = symplectic_form(n / 2);
        let dev = (&matrix * &omega * matrix.transpose() - &omega).amax();
        if dev > SYMPLECTIC_TOL * matrix.amax().powi(2).max(1.0) {
            return Err(Error::NotSymplectic(dev));
        }
        Ok(Self { matrix, shift })
    }

    pub fn linear(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        Self::new(matrix, DVector::zeros(n))
    }

    pub fn identity(m: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * m, 2 * m),
            shift: DVector::zeros(2 * m),
        }
    }

    /// Parity unitary exp(iπ Σ n_j): Q ↦ −Q on every mode.
    pub fn twirl(m: usize) -> Self {
        Self {
            matrix: -DMatrix::identity(2 * m, 2 * m),
            shift: DVector::zeros(2 * m),
        }
    }

    /// Local map acting with one 2×2 symplectic block per mode.
    pub fn local(blocks: &[Matrix2<f64>]) -> Result<Self> {
        let m = blocks.len();
        let mut matrix = DMatrix::zeros(2 * m, 2 * m);
        for (j, b) in blocks.iter().enumerate() {
            matrix.view_mut((2 * j, 2 * j), (2, 2)).copy_from(b);
        }
        Self::linear(matrix)
    }

    pub fn modes(&self) -> usize {
        self.shift.len() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState> {
        if state.d.len() != self.shift.len() {
            return Err(Error::DimensionMismatch {
                expected: self.shift.len(),
                found: state.d.len(),
            });
        }
        GaussianState::new(
            &self.matrix * &state.d + &self.shift,
            self.apply_cov(&state.gamma),
        )
    }

    pub fn apply_cov(&self, gamma: &DMatrix<f64>) -> DMatrix<f64> {
        linalg::symmetrize(&(&self.matrix * gamma * self.matrix.transpose()))
    }

    /// The map "self, then next".
    pub fn then(&self, next: &SymplecticMap) -> Result<SymplecticMap> {
        if next.modes() != self.modes() {
            return Err(Error::DimensionMismatch {
                expected: self.modes(),
                found: next.modes(),
            });
        }
        Ok(Self {
            matrix: &next.matrix * &self.matrix,
            shift: &next.matrix * &self.shift + &next.shift,
        })
    }

    pub fn direct_sum(&self, other: &SymplecticMap) -> SymplecticMap {
        let mut shift = DVector::zeros(self.shift.len() + other.shift.len());
        shift.rows_mut(0, self.shift.len()).copy_from(&self.shift);
        shift
            .rows_mut(self.shift.len(), other.shift.len())
            .copy_from(&other.shift);
        Self {
            matrix: linalg::direct_sum(&self.matrix, &other.matrix),
            shift,
        }
    }

    /// 2×2 block of mode j if the linear part is mode-local, else None.
    pub fn local_block(&self, j: usize) -> Option<Matrix2<f64>> {
        let m = self.modes();
        if j >= m {
            return None;
        }
        for k in 0..m {
            if k == j {
                continue;
            }
            let off = self.matrix.view((2 * j, 2 * k), (2, 2)).amax();
            let off_t = self.matrix.view((2 * k, 2 * j), (2, 2)).amax();
            if off > 0.0 || off_t > 0.0 {
                return None;
            }
        }
        let b = self.matrix.view((2 * j, 2 * j), (2, 2));
        Some(Matrix2::new(b[(0, 0)], b[(0, 1)], b[(1, 0)], b[(1, 1)]))
    }

    pub fn is_local(&self) -> bool {
        (0..self.modes()).all(|j| self.local_block(j).is_some())
    }

    pub fn is_identity(&self) -> bool {
        let n = self.shift.len();
        (&self.matrix - DMatrix::identity(n, n)).amax() == 0.0 && self.shift.amax() == 0.0
    }
}

/// Phase-space rotation by angle θ: (X, P) ↦ (cos θ X − sin θ P, sin θ X + cos θ P).
pub fn rotation_block(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Single-mode squeezer: X ↦ e^{−r} X, P ↦ e^{r} P.
pub fn squeezer_block(r: f64) -> Matrix2<f64> {
    Matrix2::new((-r).exp(), 0.0, 0.0, r.exp())
}

/// Beam splitter of reflectivity R mixing mode Aj with mode Bj for every j.
///
/// Ordering is (A1..Am, B1..Bm). A output: √T A + √R B; B output: √T B − √R A.
pub fn beam_splitter_map(reflectivity: f64, m: usize) -> Result<SymplecticMap> {
    if !(0.0..=1.0).contains(&reflectivity) {
        return Err(Error::param(
            "R",
            reflectivity,
            "reflectivity must lie in [0, 1]",
        ));
    }
    if m == 0 {
        return Err(Error::param("modes", 0.0, "need at least one mode"));
    }
    let t = (1.0 - reflectivity).sqrt();
    let rho = reflectivity.sqrt();
    let mut matrix = DMatrix::zeros(4 * m, 4 * m);
    for j in 0..m {
        for q in 0..2 {
            let a = 2 * j + q;
            let b = 2 * (m + j) + q;
            matrix[(a, a)] = t;
            matrix[(a, b)] = rho;
            matrix[(b, b)] = t;
            matrix[(b, a)] = -rho;
        }
    }
    SymplecticMap::linear(matrix)
}

/// Symmetric two-mode Gaussian state parameterised by (C, S):
///
/// ```text
/// Γ = [[C, 0, S, 0], [0, C, 0, −S], [S, 0, C, 0], [0, −S, 0, C]]
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricTwoMode {
    c: f64,
    s: f64,
}

impl SymmetricTwoMode {
    pub fn new(c: f64, s: f64) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::param("C", c, "must be finite and non-negative"));
        }
        if !s.is_finite() || s < 0.0 {
            return Err(Error::param("S", s, "must be finite and non-negative"));
        }
        // C² − S² − 1 evaluated as (C−1)(C+1) − S² keeps precision near the vacuum.
        let excess = (c - 1.0) * (c + 1.0) - s * s;
        if excess < -PHYSICALITY_TOL * c.max(1.0).powi(2) {
            return Err(Error::Unphysical {
                min_eigenvalue: excess,
            });
        }
        Ok(Self { c, s })
    }

    /// Two-mode squeezed vacuum: C = cosh 2r, S = sinh 2r.
    pub fn two_mode_squeezed(r: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::param("r", r, "squeezing must be finite and non-negative"));
        }
        Ok(Self {
            c: (2.0 * r).cosh(),
            s: (2.0 * r).sinh(),
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Duan EPR uncertainty Δ = C − S; the state is entangled iff Δ < 1.
    pub fn duan_delta(&self) -> f64 {
        self.c - self.s
    }

    pub fn is_entangled(&self) -> bool {
        self.duan_delta() < 1.0
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let (c, s) = (self.c, self.s);
        DMatrix::from_row_slice(
            4,
            4,
            &[
                c, 0.0, s, 0.0, //
                0.0, c, 0.0, -s, //
                s, 0.0, c, 0.0, //
                0.0, -s, 0.0, c,
            ],
        )
    }

    pub fn embed(&self) -> GaussianState {
        GaussianState {
            d: DVector::zeros(4),
            gamma: self.covariance(),
        }
    }

    /// Extracts (C, S) from a covariance matrix of the symmetric form.
    pub fn from_covariance(gamma: &DMatrix<f64>, tol: f64) -> Result<Self> {
        if gamma.shape() != (4, 4) {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: gamma.nrows(),
            });
        }
        let c = gamma[(0, 0)];
        let s = gamma[(0, 2)];
        let candidate = Self::new(c, s)?;
        let dev = (candidate.covariance() - gamma).amax();
        if dev > tol * c.max(1.0) {
            return Err(Error::Unsupported(format!(
                "covariance is not of the symmetric two-mode form (deviation {dev:e})"
            )));
        }
        Ok(candidate)
    }
}

/// Separable zero-mean Gaussian filter Π ∝ V exp(−Σ β_j n_j) V† with local V.
///
/// P = Π^{1/2} has eigenvalues exp(−β_j n/2) on the V-rotated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFilter {
    betas: Vec<f64>,
    mode_unitary: SymplecticMap,
}

impl GaussianFilter {
    pub fn new(betas: Vec<f64>, mode_unitary: SymplecticMap) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::param("modes", 0.0, "need at least one mode"));
        }
        for &b in &betas {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::param("beta", b, "filter strength must be finite and positive"));
            }
        }
        if mode_unitary.modes() != betas.len() {
            return Err(Error::DimensionMismatch {
                expected: betas.len(),
                found: mode_unitary.modes(),
            });
        }
        if !mode_unitary.is_local() {
            return Err(Error::Unsupported(
                "filter unitary must act locally on each mode".into(),
            ));
        }
        if mode_unitary.shift().amax() != 0.0 {
            return Err(Error::Unsupported(
                "filter must have zero first moments".into(),
            ));
        }
        Ok(Self {
            betas,
            mode_unitary,
        })
    }

    /// Thermal-type filter with V = identity.
    pub fn thermal(betas: Vec<f64>) -> Result<Self> {
        let m = betas.len();
        Self::new(betas, SymplecticMap::identity(m.max(1)))
    }

    /// The same β on each of m modes.
    pub fn uniform(beta: f64, m: usize) -> Result<Self> {
        Self::thermal(vec![beta; m])
    }

    pub fn modes(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn mode_unitary(&self) -> &SymplecticMap {
        &self.mode_unitary
    }

    /// Eigenvalue of P on the n-th V-rotated Fock state of mode j.
    pub fn p_eigenvalue(&self, mode: usize, n: usize) -> f64 {
        (-0.5 * self.betas[mode] * n as f64).exp()
    }

    fn cov_with(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let m = self.modes();
        let mut diag = DMatrix::zeros(2 * m, 2 * m);
        for (j, &b) in self.betas.iter().enumerate() {
            let v = f(b);
            diag[(2 * j, 2 * j)] = v;
            diag[(2 * j + 1, 2 * j + 1)] = v;
        }
        self.mode_unitary.apply_cov(&diag)
    }

    /// Covariance of Π viewed as a (normalised) Gaussian state: coth(β/2) per mode.
    pub fn cov_pi(&self) -> DMatrix<f64> {
        self.cov_with(|b| 1.0 / (0.5 * b).tanh())
    }

    /// Covariance of P = Π^{1/2}: coth(β/4) per mode.
    pub fn cov_p(&self) -> DMatrix<f64> {
        self.cov_with(|b| 1.0 / (0.25 * b).tanh())
    }

    /// Filter with every β scaled by `factor` (P² corresponds to factor 2).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.betas.iter().map(|b| b * factor).collect(),
            self.mode_unitary.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_charfun() {
        let v = GaussianState::vacuum(1).unwrap();
        let chi = v.charfun(&[2.0, 0.0]).unwrap();
        assert!((chi.re - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(v.charfun(&[0.0, 0.0]).unwrap(), Complex64::new(1.0, 0.0));
        assert!(GaussianState::vacuum(0).is_err());
    }

    #[test]
    fn unphysical_covariance_rejected() {
        let g = DMatrix::identity(2, 2) * 0.5;
        assert!(matches!(
            GaussianState::centered(g),
            Err(Error::Unphysical { .. })
        ));
    }

    #[test]
    fn tmsv_is_pure_and_delta_matches() {
        let s = SymmetricTwoMode::two_mode_squeezed(1.0).unwrap();
        assert!((s.c() * s.c() - s.s() * s.s() - 1.0).abs() < 1e-12);
        assert!((s.duan_delta() - (-2.0f64).exp()).abs() < 1e-12);
        assert!(s.embed().physicality_margin() > -1e-9);
        assert!(SymmetricTwoMode::two_mode_squeezed(-0.1).is_err());
    }

    #[test]
    fn embed_extract_round_trip() {
        let s = SymmetricTwoMode::new(2.5, 1.7).unwrap();
        let back = SymmetricTwoMode::from_covariance(s.embed().covariance(), 1e-12).unwrap();
        assert_eq!(s, back);
        assert_eq!(s.duan_delta(), back.duan_delta());
    }

    #[test]
    fn partial_transpose_flips_b_block() {
        let g = SymmetricTwoMode::new(2.0, 1.5).unwrap().covariance();
        let pt = partial_transpose_cov(&g, &[1]).unwrap();
        assert_eq!(pt[(0, 2)], 1.5);
        assert_eq!(pt[(1, 3)], 1.5);
        assert_eq!(partial_transpose_cov(&pt, &[1]).unwrap(), g);
        assert_eq!(partial_transpose_cov(&g, &[]).unwrap(), g);
        assert!(partial_transpose_cov(&g, &[2]).is_err());
    }

    #[test]
    fn beam_splitter_limits() {
        let id = beam_splitter_map(0.0, 2).unwrap();
        assert!(id.is_identity());
        let swap = beam_splitter_map(1.0, 1).unwrap();
        let g = linalg::direct_sum(
            &(DMatrix::identity(2, 2) * 3.0),
            &DMatrix::identity(2, 2),
        );
        let out = swap.apply_cov(&g);
        assert!((out[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((out[(2, 2)] - 3.0).abs() < 1e-15);
        assert!(beam_splitter_map(1.5, 1).is_err());
    }

    #[test]
    fn filter_covariances() {
        let f = GaussianFilter::uniform(1.0, 2).unwrap();
        let coth = |x: f64| 1.0 / x.tanh();
        assert!((f.cov_pi()[(0, 0)] - coth(0.5)).abs() < 1e-15);
        assert!((f.cov_p()[(3, 3)] - coth(0.25)).abs() < 1e-15);
        assert!(GaussianFilter::uniform(0.0, 1).is_err());
        let non_local = beam_splitter_map(0.5, 1).unwrap();
        assert!(GaussianFilter::new(vec![1.0, 1.0], non_local).is_err());
    }
}
