//! Expectation values, characteristic functions and state comparisons.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{
    annihilation, digits_of, displacement, enforce_leakage, gaussian_unitary, left_apply_mode,
    quadrature_p, quadrature_x, FockDensityMatrix, C64,
};
use crate::error::{Error, Result};
use crate::gaussian::GaussianFilter;
use crate::linalg;

const PSD_TOL: f64 = 1e-9;

fn check_len(rho: &FockDensityMatrix, r: &[f64]) -> Result<()> {
    if r.len() != 2 * rho.modes() {
        return Err(Error::DimensionMismatch {
            expected: 2 * rho.modes(),
            found: r.len(),
        });
    }
    Ok(())
}

fn trace(m: &DMatrix<C64>) -> C64 {
    m.trace()
}

/// χ_ρ(r) = tr[D(r) ρ] with D(r) = exp(i r·Q) = ⊗_j D_j built per mode.
pub fn charfun_numeric(rho: &FockDensityMatrix, r: &[f64]) -> Result<C64> {
    check_len(rho, r)?;
    let d = rho.cutoff();
    let mut full = displacement(r[0], r[1], d);
    for j in 1..rho.modes() {
        full = full.kronecker(&displacement(r[2 * j], r[2 * j + 1], d));
    }
    // tr(Dρ) = Σ_{ij} D_ij ρ_ji
    Ok(full.component_mul(&rho.data().transpose()).sum())
}

/// Ordered product H_1 ⋯ H_k of linear quadrature combinations H_j = Σ_i r_{j,i} Q_i.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSpec {
    factors: Vec<Vec<f64>>,
}

impl MomentSpec {
    pub fn new(factors: Vec<Vec<f64>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::param("k", 0.0, "moment order must be at least 1"));
        }
        let n = factors[0].len();
        for f in &factors {
            if f.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: f.len(),
                });
            }
            if f.iter().all(|&x| x == 0.0) {
                return Err(Error::param("direction", 0.0, "moment directions must be nonzero"));
            }
        }
        Ok(Self { factors })
    }

    /// H^k for a single direction.
    pub fn power(direction: &[f64], k: usize) -> Result<Self> {
        Self::new(vec![direction.to_vec(); k])
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Vec<f64>] {
        &self.factors
    }
}

/// tr(H_1 ⋯ H_k ρ). The state is zero-padded by k levels per mode so that every
/// intermediate product is exact on the support of ρ.
pub fn moment(rho: &FockDensityMatrix, spec: &MomentSpec) -> Result<C64> {
    check_len(rho, &spec.factors[0])?;
    rho.check_leakage()?;
    let k = spec.order();
    let big = rho.cutoff() + k;
    let padded = rho.padded(big)?;
    let m = rho.modes();
    let dims = vec![big; m];
    let x = quadrature_x(big);
    let p = quadrature_p(big);
    let mut acc = padded.data().clone();
    for factor in spec.factors.iter().rev() {
        let mut next = DMatrix::zeros(acc.nrows(), acc.ncols());
        for j in 0..m {
            let (rx, rp) = (factor[2 * j], factor[2 * j + 1]);
            if rx == 0.0 && rp == 0.0 {
                continue;
            }
            let h = &x * C64::new(rx, 0.0) + &p * C64::new(rp, 0.0);
            next += left_apply_mode(&acc, &dims, j, &h);
        }
        acc = next;
    }
    Ok(trace(&acc))
}

/// First moments and covariance matrix from the number-basis state.
pub fn covariance_from_fock(rho: &FockDensityMatrix) -> Result<(DVector<f64>, DMatrix<f64>)> {
    rho.check_leakage()?;
    let m = rho.modes();
    let big = rho.cutoff() + 2;
    let padded = rho.padded(big)?;
    let t = padded.trace();
    let dims = vec![big; m];
    let quads = [quadrature_x(big), quadrature_p(big)];
    // Y_i = Q_i ρ for every quadrature.
    let ys: Vec<DMatrix<C64>> = (0..2 * m)
        .map(|i| left_apply_mode(padded.data(), &dims, i / 2, &quads[i % 2]))
        .collect();
    let d = DVector::from_fn(2 * m, |i, _| trace(&ys[i]).re / t);
    let mut gamma = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..2 * m {
        for k in 0..=i {
            let qiqk = left_apply_mode(&ys[k], &dims, i / 2, &quads[i % 2]);
            let v = 2.0 * trace(&qiqk).re / t - 2.0 * d[i] * d[k];
            gamma[(i, k)] = v;
            gamma[(k, i)] = v;
        }
    }
    Ok((d, gamma))
}

/// Uhlmann fidelity F = (tr √(√ρ₁ ρ₂ √ρ₁))² of the trace-normalised inputs.
pub fn fidelity(rho1: &FockDensityMatrix, rho2: &FockDensityMatrix) -> Result<f64> {
    if rho1.modes() != rho2.modes() || rho1.cutoff() != rho2.cutoff() {
        return Err(Error::DimensionMismatch {
            expected: rho1.dim(),
            found: rho2.dim(),
        });
    }
    let a = rho1.normalize()?;
    let b = rho2.normalize()?;
    let (sa, min_a) = linalg::herm_sqrt_psd(a.data());
    let min_b = linalg::min_eigenvalue_herm(b.data());
    let min = min_a.min(min_b);
    if min < -PSD_TOL {
        return Err(Error::Unphysical { min_eigenvalue: min });
    }
    let inner = &sa * b.data() * &sa;
    let s: f64 = linalg::herm_eigenvalues(&inner)
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    Ok((s * s).clamp(0.0, 1.0))
}

/// ½(ρ + U_T ρ U_T†) with U_T the global parity exp(iπ Σ n_j).
pub fn twirl(rho: &FockDensityMatrix) -> FockDensityMatrix {
    let d = rho.cutoff();
    let m = rho.modes();
    let mut digits = vec![0usize; m];
    let parity: Vec<usize> = (0..rho.dim())
        .map(|i| {
            digits_of(i, d, &mut digits);
            digits.iter().sum::<usize>() % 2
        })
        .collect();
    let data = DMatrix::from_fn(rho.dim(), rho.dim(), |i, j| {
        if parity[i] == parity[j] {
            rho.data()[(i, j)]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    FockDensityMatrix::from_parts(m, d, data, rho.is_normalized()).expect("shape preserved")
}

/// tr[Π_j (b_j†^{p_j} b_j^{q_j}) ρ] with b_j the filter's V-rotated mode
/// operators, for the trace-normalised state.
pub fn normally_ordered_moment(
    rho: &FockDensityMatrix,
    filter: Option<&GaussianFilter>,
    creators: &[usize],
    annihilators: &[usize],
) -> Result<C64> {
    let m = rho.modes();
    if creators.len() != m || annihilators.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: creators.len().min(annihilators.len()),
        });
    }
    let d = rho.cutoff();
    let a = annihilation(d);
    let dims = vec![d; m];
    let t = rho.trace();
    let mut acc = rho.data().clone();
    for j in 0..m {
        // Entries of a†^p a^q between levels below d are exact even though the
        // matrices are truncated, and the trace only pairs such entries.
        let mut op = DMatrix::<C64>::identity(d, d);
        for _ in 0..annihilators[j] {
            op = &a * op;
        }
        for _ in 0..creators[j] {
            op = a.adjoint() * op;
        }
        if let Some(f) = filter {
            if let Some(block) = f.mode_unitary().local_block(j) {
                if block != nalgebra::Matrix2::identity() {
                    let v = gaussian_unitary(&block, d)?;
                    op = &v * op * v.adjoint();
                }
            }
        }
        acc = left_apply_mode(&acc, &dims, j, &op);
    }
    Ok(trace(&acc) / t)
}

/// Outcome of the reference-state dominance check at one degree.
#[derive(Debug, Clone, Serialize)]
pub struct DegreeCheck {
    pub degree: usize,
    /// |tr(Oτ)| ≤ |tr(Oτ_ref)| for every normally ordered monomial O.
    pub dominated: bool,
    /// tr(Oτ_ref) real and non-negative for every monomial.
    pub reference_positive: bool,
    /// min over monomials of |tr(Oτ_ref)| − |tr(Oτ)|.
    pub worst_margin: f64,
    pub monomials: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DominanceReport {
    pub degrees: Vec<DegreeCheck>,
}

impl DominanceReport {
    pub fn passed(&self) -> bool {
        self.degrees
            .iter()
            .all(|d| d.dominated && d.reference_positive)
    }

    pub fn first_failure(&self) -> Option<usize> {
        self.degrees
            .iter()
            .find(|d| !(d.dominated && d.reference_positive))
            .map(|d| d.degree)
    }
}

/// All ways to write `total` as an ordered sum of `parts` non-negative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Checks whether τ_ref dominates τ in every normally ordered moment of the
/// filter's mode operators, degree by degree up to `k_max`.
pub fn reference_dominance_check(
    tau: &FockDensityMatrix,
    tau_ref: &FockDensityMatrix,
    filter: &GaussianFilter,
    k_max: usize,
) -> Result<DominanceReport> {
    let m = tau.modes();
    if tau_ref.modes() != m || filter.modes() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: tau_ref.modes(),
        });
    }
    enforce_leakage(tau.leakage().max(tau_ref.leakage()))?;
    const TOL: f64 = 1e-12;
    let mut degrees = Vec::new();
    for k in 1..=k_max {
        let mut check = DegreeCheck {
            degree: k,
            dominated: true,
            reference_positive: true,
            worst_margin: f64::INFINITY,
            monomials: 0,
        };
        for powers in compositions(k, 2 * m) {
            let creators = &powers[..m];
            let annihilators = &powers[m..];
            let v = normally_ordered_moment(tau, Some(filter), creators, annihilators)?;
            let vr = normally_ordered_moment(tau_ref, Some(filter), creators, annihilators)?;
            let margin = vr.norm() - v.norm();
            check.worst_margin = check.worst_margin.min(margin);
            if margin < -TOL {
                check.dominated = false;
            }
            if (vr.norm() - vr.re).abs() > TOL {
                check.reference_positive = false;
            }
            check.monomials += 1;
        }
        degrees.push(check);
    }
    Ok(DominanceReport { degrees })
}

fn two_mode_element(rho: &FockDensityMatrix, row: [usize; 2], col: [usize; 2]) -> Result<C64> {
    if rho.modes() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: rho.modes(),
        });
    }
    Ok(rho.element(&row, &col))
}

/// ε = ⟨1,0|ρ|1,0⟩ / ⟨1,1|ρ|0,0⟩, which equals (C²−S²−1)/(2S) for symmetric
/// two-mode Gaussian states and is invariant under Fock-diagonal Kraus maps.
pub fn epsilon_fock(rho: &FockDensityMatrix) -> Result<f64> {
    let num = two_mode_element(rho, [1, 0], [1, 0])?.re;
    let den = two_mode_element(rho, [1, 1], [0, 0])?.re;
    if den.abs() < 1e-300 {
        return Ok(f64::INFINITY);
    }
    Ok(num / den)
}

/// Λ = ⟨1,1|ρ|0,0⟩ / ⟨0,0|ρ|0,0⟩, the low-photon-number coherence ratio.
pub fn lambda_fock(rho: &FockDensityMatrix) -> Result<f64> {
    let num = two_mode_element(rho, [1, 1], [0, 0])?.re;
    let den = two_mode_element(rho, [0, 0], [0, 0])?.re;
    if den <= 0.0 {
        return Err(Error::DegeneratePostSelection { weight: den });
    }
    Ok(num / den)
}
