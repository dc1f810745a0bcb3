//! Single-mode operator matrices in the truncated number basis.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, Matrix2};

use super::C64;
use crate::error::{Error, Result};
use crate::gaussian::GaussianFilter;

/// Extra levels used when exponentiating generators, so that the d × d
/// block of the result is unaffected by the artificial boundary.
pub(crate) const PAD: usize = 30;

pub fn annihilation(d: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// X = (a + a†)/√2.
pub fn quadrature_x(d: usize) -> DMatrix<C64> {
    let a = annihilation(d);
    (&a + a.adjoint()) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

/// P = i(a† − a)/√2.
pub fn quadrature_p(d: usize) -> DMatrix<C64> {
    let a = annihilation(d);
    (a.adjoint() - &a) * C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2)
}

fn top_block(m: &DMatrix<C64>, d: usize) -> DMatrix<C64> {
    m.view((0, 0), (d, d)).into_owned()
}

/// Eigenvectors and eigenvalues of the truncated X matrix.
type Spectrum = Arc<(DMatrix<f64>, Vec<f64>)>;

/// Spectral data of the truncated X matrix, cached per dimension.
fn x_spectrum(dim: usize) -> Spectrum {
    static CACHE: OnceLock<Mutex<HashMap<usize, Spectrum>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().expect("cache lock").get(&dim) {
        return hit.clone();
    }
    let x = DMatrix::from_fn(dim, dim, |i, j| {
        if i + 1 == j {
            (j as f64 / 2.0).sqrt()
        } else if j + 1 == i {
            (i as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = x.symmetric_eigen();
    let entry = Arc::new((eig.eigenvectors, eig.eigenvalues.iter().cloned().collect()));
    cache.lock().expect("cache lock").insert(dim, entry.clone());
    entry
}

/// Weyl operator exp(i(r_x X + r_p P)) restricted to the first d levels.
///
/// The exponential of the padded, truncated generator is taken spectrally:
/// r_x X + r_p P = |r| e^{iφn} X e^{−iφn} with tan φ = r_p / r_x, and the
/// truncated X is diagonalised once per dimension.
pub fn displacement(rx: f64, rp: f64, d: usize) -> DMatrix<C64> {
    let r = rx.hypot(rp);
    // |α|² = r²/2; pad generously beyond the displaced photon-number spread,
    // rounded so that the spectral cache is shared between nearby radii.
    let pad = PAD.max((2.0 * r * r + 8.0 * r + 10.0).ceil() as usize);
    let dim = d + pad.div_ceil(10) * 10;
    let phi = rp.atan2(rx);
    let spec = x_spectrum(dim);
    let (v, x) = (&spec.0, &spec.1);
    let phases: Vec<C64> = x.iter().map(|&xk| C64::from_polar(1.0, r * xk)).collect();
    DMatrix::from_fn(d, d, |n, np| {
        let mut acc = C64::new(0.0, 0.0);
        for (k, ph) in phases.iter().enumerate() {
            acc += ph * (v[(n, k)] * v[(np, k)]);
        }
        acc * C64::from_polar(1.0, phi * (n as f64 - np as f64))
    })
}

/// Fock unitary e^{iθn} whose phase-space action is `rotation_block(θ)`.
pub fn rotation_unitary(theta: f64, d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            C64::from_polar(1.0, theta * i as f64)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

fn squeezer_padded(r: f64, dim: usize) -> DMatrix<C64> {
    let a = annihilation(dim);
    let a2 = &a * &a;
    let gen = (&a2 - a2.adjoint()) * C64::new(0.5 * r, 0.0);
    gen.exp()
}

/// exp(r/2 (a² − a†²)), whose phase-space action is `squeezer_block(r)`.
pub fn squeezer_unitary(r: f64, d: usize) -> DMatrix<C64> {
    top_block(&squeezer_padded(r, d + squeeze_pad(r)), d)
}

fn squeeze_pad(r: f64) -> usize {
    PAD + (20.0 * r.abs()).ceil() as usize
}

/// Fock unitary implementing an arbitrary single-mode 2×2 symplectic matrix,
/// via the decomposition M = R(θ1) S(r) R(θ2).
pub fn gaussian_unitary(m: &Matrix2<f64>, d: usize) -> Result<DMatrix<C64>> {
    let det = m.determinant();
    if (det - 1.0).abs() > 1e-9 {
        return Err(Error::NotSymplectic((det - 1.0).abs()));
    }
    let svd = m.svd(true, true);
    let mut u = svd.u.expect("requested U");
    let mut vt = svd.v_t.expect("requested V^T");
    if u.determinant() < 0.0 {
        let flip = Matrix2::new(1.0, 0.0, 0.0, -1.0);
        u *= flip;
        vt = flip * vt;
    }
    let sigma_max = svd.singular_values[0];
    // diag(σ_max, 1/σ_max) = squeezer_block(−ln σ_max).
    let r = -sigma_max.ln();
    let theta1 = u[(1, 0)].atan2(u[(0, 0)]);
    let theta2 = vt[(1, 0)].atan2(vt[(0, 0)]);
    let dim = d + squeeze_pad(r);
    let full = rotation_unitary(theta1, dim) * squeezer_padded(r, dim) * rotation_unitary(theta2, dim);
    Ok(top_block(&full, d))
}

/// V exp(−power · β n / 2) V† on mode j of a filter: power 1 gives P,
/// −1 gives P⁻¹ and 2 gives Π.
pub fn filter_matrix(
    filter: &GaussianFilter,
    mode: usize,
    d: usize,
    power: f64,
) -> Result<DMatrix<C64>> {
    if mode >= filter.modes() {
        return Err(Error::IndexOutOfRange {
            index: mode,
            len: filter.modes(),
        });
    }
    let beta = filter.betas()[mode];
    let diag = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            C64::new((-0.5 * power * beta * i as f64).exp(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let block = filter
        .mode_unitary()
        .local_block(mode)
        .expect("filter unitaries are local");
    if block == Matrix2::identity() {
        return Ok(diag);
    }
    let v = gaussian_unitary(&block, d)?;
    Ok(&v * diag * v.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{rotation_block, squeezer_block};

    /// Heisenberg action U† Q U on the low-lying block, compared with M Q.
    fn heisenberg_check(u: &DMatrix<C64>, m: &Matrix2<f64>, d: usize, keep: usize) -> f64 {
        let x = quadrature_x(d);
        let p = quadrature_p(d);
        let ux = u.adjoint() * &x * u;
        let up = u.adjoint() * &p * u;
        let ex = &x * C64::new(m[(0, 0)], 0.0) + &p * C64::new(m[(0, 1)], 0.0);
        let ep = &x * C64::new(m[(1, 0)], 0.0) + &p * C64::new(m[(1, 1)], 0.0);
        let dx = (ux - ex).view((0, 0), (keep, keep)).camax();
        let dp = (up - ep).view((0, 0), (keep, keep)).camax();
        dx.max(dp)
    }

    #[test]
    fn rotation_and_squeezer_conventions() {
        let d = 60;
        let rot = rotation_unitary(0.7, d);
        let e = heisenberg_check(&rot, &rotation_block(0.7), d, 20);
        assert!(e < 1e-12, "{e}");
        let sq = squeezer_unitary(0.4, d);
        let e = heisenberg_check(&sq, &squeezer_block(0.4), d, 10);
        assert!(e < 1e-8, "{e}");
    }

    #[test]
    fn general_symplectic_unitary() {
        let m = rotation_block(0.3) * squeezer_block(0.35) * rotation_block(-1.1);
        let d = 60;
        let u = gaussian_unitary(&m, d).unwrap();
        let e = heisenberg_check(&u, &m, d, 10);
        assert!(e < 1e-8, "{e}");
    }

    #[test]
    fn spectral_displacement_matches_pade_exponential() {
        let d = 15;
        let (rx, rp) = (1.1, 0.7);
        let dim = 80;
        let gen = (quadrature_x(dim) * C64::new(rx, 0.0) + quadrature_p(dim) * C64::new(rp, 0.0))
            * C64::new(0.0, 1.0);
        let pade = top_block(&gen.exp(), d);
        assert!((displacement(rx, rp, d) - pade).camax() < 1e-10);
    }

    #[test]
    fn displacement_shifts_quadratures() {
        // D† X D = X − r_p and D† P D = P + r_x.
        let d = 70;
        let (rx, rp) = (0.4, -0.9);
        let dm = displacement(rx, rp, d);
        let x = quadrature_x(d);
        let p = quadrature_p(d);
        let sx = dm.adjoint() * &x * &dm - (&x + DMatrix::identity(d, d) * C64::new(-rp, 0.0));
        let sp = dm.adjoint() * &p * &dm - (&p + DMatrix::identity(d, d) * C64::new(rx, 0.0));
        assert!(sx.view((0, 0), (20, 20)).camax() < 1e-9);
        assert!(sp.view((0, 0), (20, 20)).camax() < 1e-9);
        let vac = dm[(0, 0)].re;
        assert!((vac - (-(rx * rx + rp * rp) / 4.0).exp()).abs() < 1e-12);
    }
}
