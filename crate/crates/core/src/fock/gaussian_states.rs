//! Number-basis density matrices of Gaussian states.

use nalgebra::{DMatrix, DVector, Matrix2};

use super::{enforce_leakage, gaussian_unitary, BsTable, FockDensityMatrix, C64};
use crate::error::{Error, Result};
use crate::gaussian::{squeezer_block, GaussianState, SymmetricTwoMode};

/// Thermal populations below this are ignored in the pure-state decomposition.
const THERMAL_TOL: f64 = 1e-18;
const PAD: usize = 16;

fn thermal_populations(nu: f64, max: usize) -> Vec<f64> {
    let nbar = 0.5 * (nu - 1.0).max(0.0);
    let q = nbar / (nbar + 1.0);
    let mut out = Vec::new();
    let mut p = 1.0 / (nbar + 1.0);
    for _ in 0..max {
        if p < THERMAL_TOL {
            break;
        }
        out.push(p);
        p *= q;
    }
    out
}

/// Real symmetric square root of a 2×2 positive matrix.
fn sqrtm2(m: &Matrix2<f64>) -> Matrix2<f64> {
    let eig = m.symmetric_eigen();
    let d = Matrix2::new(
        eig.eigenvalues[0].max(0.0).sqrt(),
        0.0,
        0.0,
        eig.eigenvalues[1].max(0.0).sqrt(),
    );
    eig.eigenvectors * d * eig.eigenvectors.transpose()
}

fn single_mode(gamma: &Matrix2<f64>, d: usize) -> Result<DMatrix<C64>> {
    let nu = gamma.determinant().sqrt();
    if !(nu >= 1.0 - 1e-9) {
        return Err(Error::Unphysical {
            min_eigenvalue: nu - 1.0,
        });
    }
    // Γ = ν S Sᵀ with S = (Γ/ν)^{1/2} symmetric and of unit determinant.
    let s = sqrtm2(&(gamma / nu));
    let big = d + PAD;
    let u = gaussian_unitary(&s, big)?;
    let pops = thermal_populations(nu, big);
    let mut rho = DMatrix::zeros(d, d);
    for (n, &p) in pops.iter().enumerate() {
        let col = u.column(n).rows(0, d).into_owned();
        rho += &col * col.adjoint() * C64::new(p, 0.0);
    }
    Ok(rho)
}

/// Symmetric two-mode state as a thermal product passed through the two-mode
/// squeezer U_BS(1/2) · (S(r) ⊗ S(−r)).
fn symmetric_two_mode(s: &SymmetricTwoMode, d: usize) -> Result<DMatrix<C64>> {
    let nu = ((s.c() - s.s()) * (s.c() + s.s())).sqrt();
    let r = 0.5 * (s.c() / nu).acosh();
    // Photon numbers up to 2d feed the first d levels of each output mode.
    let big = 2 * d + PAD;
    let sq_plus = gaussian_unitary(&squeezer_block(r), big)?;
    let sq_minus = gaussian_unitary(&squeezer_block(-r), big)?;
    let table = BsTable::new(big, 0.5)?;
    let pops = thermal_populations(nu, big);
    let mut cols: Vec<DVector<C64>> = Vec::new();
    for (j, &pj) in pops.iter().enumerate() {
        for (k, &pk) in pops.iter().enumerate() {
            let w = pj * pk;
            if w < THERMAL_TOL {
                continue;
            }
            let u = sq_plus.column(j);
            let v = sq_minus.column(k);
            let mut out = DVector::zeros(d * d);
            for x in 0..big {
                if u[x] == C64::new(0.0, 0.0) {
                    continue;
                }
                for y in 0..big {
                    let amp = u[x] * v[y];
                    if amp.norm_sqr() < 1e-40 {
                        continue;
                    }
                    for (a, b, t) in table.outputs(x, y, d, d) {
                        out[a * d + b] += amp * t;
                    }
                }
            }
            cols.push(out * C64::new(w.sqrt(), 0.0));
        }
    }
    let k = DMatrix::from_columns(&cols);
    Ok(&k * k.adjoint())
}

impl FockDensityMatrix {
    /// Number-basis representation of a zero-mean Gaussian state.
    ///
    /// Supported: any single-mode state, two-mode states of the symmetric
    /// (C, S) form, and products of single-mode states.
    pub fn from_gaussian(state: &GaussianState, cutoff: usize) -> Result<Self> {
        if state.first_moments().amax() > 0.0 {
            return Err(Error::Unsupported(
                "Fock construction of displaced Gaussian states".into(),
            ));
        }
        let g = state.covariance();
        let m = state.modes();
        let block = |j: usize| {
            Matrix2::new(
                g[(2 * j, 2 * j)],
                g[(2 * j, 2 * j + 1)],
                g[(2 * j + 1, 2 * j)],
                g[(2 * j + 1, 2 * j + 1)],
            )
        };
        let data = if m == 1 {
            single_mode(&block(0), cutoff)?
        } else if let Ok(s) = SymmetricTwoMode::from_covariance(g, 1e-12) {
            symmetric_two_mode(&s, cutoff)?
        } else {
            let mut product_form = true;
            for i in 0..m {
                for j in 0..m {
                    if i != j && g.view((2 * i, 2 * j), (2, 2)).amax() > 0.0 {
                        product_form = false;
                    }
                }
            }
            if !product_form {
                return Err(Error::Unsupported(
                    "Fock construction of correlated Gaussian states beyond the symmetric two-mode form"
                        .into(),
                ));
            }
            let mut data = single_mode(&block(0), cutoff)?;
            for j in 1..m {
                data = data.kronecker(&single_mode(&block(j), cutoff)?);
            }
            data
        };
        let state = Self::from_parts(m, cutoff, data, false)?;
        enforce_leakage(state.leakage())?;
        state.normalize()
    }
}
