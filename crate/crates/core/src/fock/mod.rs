//! Truncated Fock-space density matrices: the brute-force oracle.
//!
//! A multi-mode basis state |n_1, ..., n_m⟩ has linear index Σ_j n_j d^{m−1−j}
//! (mode 1 most significant), so the data matrix of a product state is the
//! Kronecker product of the single-mode matrices in mode order.

mod beamsplitter;
mod diagnostics;
mod gaussian_states;
mod ops;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::GaussianFilter;
use crate::linalg;

pub use beamsplitter::{
    building_block, conjugation_residual, photon_replacement, photon_replacement_kraus, truncated_beam_splitter,
    BsTable, ConjugationResidual, PairAmplitudes,
};
use beamsplitter::filtered_object_impl;
pub use diagnostics::{
    charfun_numeric, covariance_from_fock, epsilon_fock, fidelity, lambda_fock, moment,
    normally_ordered_moment, reference_dominance_check, twirl, DegreeCheck, DominanceReport,
    MomentSpec,
};
pub use ops::{
    annihilation, displacement, filter_matrix, gaussian_unitary, quadrature_p, quadrature_x,
    rotation_unitary, squeezer_unitary,
};

pub(crate) type C64 = Complex64;

/// Truncation leakage above which an operation fails.
pub const LEAKAGE_ERROR: f64 = 1e-6;
/// Truncation leakage above which a warning is logged.
pub const LEAKAGE_WARN: f64 = 1e-9;
/// Default per-mode cutoff for two-mode pipelines.
pub const DEFAULT_CUTOFF: usize = 20;

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-9;
const TRACE_TOL: f64 = 1e-9;
/// Smallest trace that may be renormalised.
pub const MIN_WEIGHT: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    modes: usize,
    cutoff: usize,
    data: DMatrix<C64>,
    normalized: bool,
}

impl FockDensityMatrix {
    /// Validating constructor: Hermitian, PSD and (if flagged) unit trace.
    pub fn from_matrix(
        modes: usize,
        cutoff: usize,
        data: DMatrix<C64>,
        normalized: bool,
    ) -> Result<Self> {
        let state = Self::from_parts(modes, cutoff, data, normalized)?;
        let scale = state.data.camax().max(1.0);
        let asym = (&state.data - state.data.adjoint()).camax();
        if asym > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(asym));
        }
        let min_eig = linalg::min_eigenvalue_herm(&state.data);
        if min_eig < -PSD_TOL {
            return Err(Error::Unphysical {
                min_eigenvalue: min_eig,
            });
        }
        if normalized && (state.trace() - 1.0).abs() > TRACE_TOL {
            return Err(Error::param(
                "trace",
                state.trace(),
                "normalized state must have unit trace",
            ));
        }
        Ok(state)
    }

    /// Shape-checked constructor for data that is Hermitian PSD by construction.
    /// The Hermitian part is kept so round-off cannot accumulate asymmetry.
    pub(crate) fn from_parts(
        modes: usize,
        cutoff: usize,
        data: DMatrix<C64>,
        normalized: bool,
    ) -> Result<Self> {
        if modes == 0 {
            return Err(Error::param("modes", 0.0, "need at least one mode"));
        }
        if cutoff < 2 {
            return Err(Error::param("cutoff", cutoff as f64, "cutoff must be at least 2"));
        }
        let dim = cutoff.pow(modes as u32);
        if data.nrows() != dim || data.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: data.nrows(),
            });
        }
        let data = (&data + data.adjoint()) * C64::new(0.5, 0.0);
        Ok(Self {
            modes,
            cutoff,
            data,
            normalized,
        })
    }

    /// Normalised pure state from an amplitude vector.
    pub fn from_pure(modes: usize, cutoff: usize, psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0) {
            return Err(Error::DegeneratePostSelection { weight: 0.0 });
        }
        let psi = psi / C64::new(norm, 0.0);
        Self::from_parts(modes, cutoff, &psi * psi.adjoint(), true)
    }

    pub fn vacuum(modes: usize, cutoff: usize) -> Result<Self> {
        Self::number_state(&vec![0; modes], cutoff)
    }

    pub fn number_state(ns: &[usize], cutoff: usize) -> Result<Self> {
        let modes = ns.len();
        if modes == 0 {
            return Err(Error::param("modes", 0.0, "need at least one mode"));
        }
        if let Some(&n) = ns.iter().find(|&&n| n >= cutoff) {
            return Err(Error::param("n", n as f64, "photon number must be below the cutoff"));
        }
        let dim = cutoff.pow(modes as u32);
        let mut psi = DVector::zeros(dim);
        psi[index_of(ns, cutoff)] = C64::new(1.0, 0.0);
        Self::from_pure(modes, cutoff, &psi)
    }

    /// Two-mode squeezed vacuum Σ tanhⁿ r |n, n⟩ / cosh r, renormalised after truncation.
    pub fn tmsv(r: f64, cutoff: usize) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::param("r", r, "squeezing must be finite and non-negative"));
        }
        let lam = r.tanh();
        let mut psi = DVector::zeros(cutoff * cutoff);
        for n in 0..cutoff {
            psi[n * cutoff + n] = C64::new(lam.powi(n as i32), 0.0);
        }
        let state = Self::from_pure(2, cutoff, &psi)?;
        // Exact (untruncated) population beyond the cutoff window.
        let tail = lam.powi(2 * (cutoff as i32 - 2));
        enforce_leakage(tail.max(state.leakage()))?;
        Ok(state)
    }

    /// Pure single-mode squeezed vacuum with parameter λ = tanh r:
    /// amplitudes ∝ λⁿ √((2n)!) / (2ⁿ n!) on |2n⟩.
    pub fn squeezed_reference(lambda: f64, cutoff: usize) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::param("lambda", lambda, "must lie in (0, 1)"));
        }
        let mut psi = DVector::zeros(cutoff);
        let mut amp = 1.0f64;
        let mut n = 0usize;
        while 2 * n < cutoff {
            psi[2 * n] = C64::new(amp, 0.0);
            // c_{n+1}/c_n = λ √((2n+1)(2n+2)) / (2(n+1))
            amp *= lambda * (((2 * n + 1) * (2 * n + 2)) as f64).sqrt() / (2.0 * (n + 1) as f64);
            n += 1;
        }
        let state = Self::from_pure(1, cutoff, &psi)?;
        enforce_leakage(state.leakage())?;
        Ok(state)
    }

    /// Convex combination Σ w_i ρ_i of states with identical shape.
    pub fn mixture(parts: &[(f64, &FockDensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or(Error::param("parts", 0.0, "mixture needs at least one state"))?
            .1;
        let mut data = DMatrix::zeros(first.dim(), first.dim());
        let mut total = 0.0;
        for (w, s) in parts {
            if s.modes != first.modes || s.cutoff != first.cutoff {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    found: s.dim(),
                });
            }
            if !(*w >= 0.0) {
                return Err(Error::param("weight", *w, "mixture weights must be non-negative"));
            }
            data += &s.data * C64::new(*w, 0.0);
            total += w;
        }
        Self::from_parts(first.modes, first.cutoff, data, (total - 1.0).abs() < TRACE_TOL)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    pub fn purity(&self) -> f64 {
        let t = self.trace();
        (&self.data * &self.data).trace().re / (t * t)
    }

    /// Returns the state divided by its trace.
    pub fn normalize(&self) -> Result<Self> {
        let t = self.trace();
        if !(t > MIN_WEIGHT) {
            return Err(Error::DegeneratePostSelection { weight: t });
        }
        Ok(Self {
            modes: self.modes,
            cutoff: self.cutoff,
            data: &self.data / C64::new(t, 0.0),
            normalized: true,
        })
    }

    /// Matrix element ⟨row|ρ|col⟩ for multi-indices.
    pub fn element(&self, row: &[usize], col: &[usize]) -> C64 {
        self.data[(index_of(row, self.cutoff), index_of(col, self.cutoff))]
    }

    /// Total population (relative to the trace) in the top two Fock levels of
    /// the worst mode.
    pub fn leakage(&self) -> f64 {
        let t = self.trace().abs().max(f64::MIN_POSITIVE);
        let d = self.cutoff;
        let mut per_mode = vec![0.0; self.modes];
        let mut digits = vec![0usize; self.modes];
        for i in 0..self.dim() {
            digits_of(i, d, &mut digits);
            let p = self.data[(i, i)].re;
            for (j, &n) in digits.iter().enumerate() {
                if n + 2 >= d {
                    per_mode[j] += p;
                }
            }
        }
        per_mode.iter().cloned().fold(0.0, f64::max) / t
    }

    /// Applies the cutoff policy: error above [`LEAKAGE_ERROR`], warning above
    /// [`LEAKAGE_WARN`]. Returns the leakage estimate.
    pub fn check_leakage(&self) -> Result<f64> {
        let l = self.leakage();
        enforce_leakage(l)?;
        Ok(l)
    }

    /// Copy embedded in a larger per-mode cutoff (zero padding).
    pub fn padded(&self, new_cutoff: usize) -> Result<Self> {
        if new_cutoff < self.cutoff {
            return Err(Error::param(
                "cutoff",
                new_cutoff as f64,
                "padding cannot shrink the cutoff",
            ));
        }
        let map = reindex_map(self.modes, self.cutoff, new_cutoff);
        let dim = new_cutoff.pow(self.modes as u32);
        let mut data = DMatrix::zeros(dim, dim);
        for (i, &ni) in map.iter().enumerate() {
            for (j, &nj) in map.iter().enumerate() {
                data[(ni, nj)] = self.data[(i, j)];
            }
        }
        Ok(Self {
            modes: self.modes,
            cutoff: new_cutoff,
            data,
            normalized: self.normalized,
        })
    }

    /// Restriction to a smaller per-mode cutoff (no renormalisation).
    pub fn truncated(&self, new_cutoff: usize) -> Result<Self> {
        if new_cutoff > self.cutoff || new_cutoff < 2 {
            return Err(Error::param(
                "cutoff",
                new_cutoff as f64,
                "truncation needs 2 <= new cutoff <= old cutoff",
            ));
        }
        let map = reindex_map(self.modes, new_cutoff, self.cutoff);
        let dim = map.len();
        let data = DMatrix::from_fn(dim, dim, |i, j| self.data[(map[i], map[j])]);
        Ok(Self {
            modes: self.modes,
            cutoff: new_cutoff,
            data,
            normalized: false,
        })
    }

    /// Kronecker product ρ ⊗ σ (modes of `self` first).
    pub fn tensor(&self, other: &FockDensityMatrix) -> Result<Self> {
        if self.cutoff != other.cutoff {
            return Err(Error::DimensionMismatch {
                expected: self.cutoff,
                found: other.cutoff,
            });
        }
        Ok(Self {
            modes: self.modes + other.modes,
            cutoff: self.cutoff,
            data: self.data.kronecker(&other.data),
            normalized: self.normalized && other.normalized,
        })
    }

    /// U ρ U† with the same single-mode matrix U (d × d) on every mode.
    pub fn conjugate_all_modes(&self, u: &DMatrix<C64>) -> Result<Self> {
        if u.shape() != (self.cutoff, self.cutoff) {
            return Err(Error::DimensionMismatch {
                expected: self.cutoff,
                found: u.nrows(),
            });
        }
        let mats: Vec<&DMatrix<C64>> = vec![u; self.modes];
        self.conjugate_local(&mats)
    }

    /// (⊗_j U_j) ρ (⊗_j U_j)† for square d × d matrices, one per mode.
    pub fn conjugate_local(&self, us: &[&DMatrix<C64>]) -> Result<Self> {
        if us.len() != self.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                found: us.len(),
            });
        }
        let d = self.cutoff;
        let dims = vec![d; self.modes];
        let mut data = self.data.clone();
        for (j, u) in us.iter().enumerate() {
            if u.shape() != (d, d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: u.nrows(),
                });
            }
            data = conjugate_mode(&data, &dims, j, u);
        }
        Self::from_parts(self.modes, d, data, false)
    }
}

/// τ = PρP / tr(PρP).
pub fn filtered_object(rho: &FockDensityMatrix, filter: &GaussianFilter) -> Result<FockDensityMatrix> {
    filtered_object_impl(rho, filter, 1.0)
}

/// P⁻¹τP⁻¹ renormalised: recovers the physical state from a filtered object.
pub fn unfiltered_state(tau: &FockDensityMatrix, filter: &GaussianFilter) -> Result<FockDensityMatrix> {
    filtered_object_impl(tau, filter, -1.0)
}

pub(crate) fn enforce_leakage(leakage: f64) -> Result<()> {
    if leakage > LEAKAGE_ERROR {
        return Err(Error::CutoffLeakage {
            leakage,
            limit: LEAKAGE_ERROR,
        });
    }
    if leakage > LEAKAGE_WARN {
        log::warn!("truncation leakage {leakage:e} above warning level {LEAKAGE_WARN:e}");
    }
    Ok(())
}

pub(crate) fn index_of(ns: &[usize], d: usize) -> usize {
    ns.iter().fold(0, |acc, &n| acc * d + n)
}

pub(crate) fn digits_of(mut i: usize, d: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = i % d;
        i /= d;
    }
}

/// Linear indices in cutoff `big` of every basis state of cutoff `small`.
fn reindex_map(modes: usize, small: usize, big: usize) -> Vec<usize> {
    let dim = small.pow(modes as u32);
    let mut digits = vec![0; modes];
    (0..dim)
        .map(|i| {
            digits_of(i, small, &mut digits);
            index_of(&digits, big)
        })
        .collect()
}

/// (I ⊗ .. ⊗ U ⊗ .. ⊗ I) M acting on the row index of M, where the rows are
/// a row-major multi-index with the given per-mode dims. U may be rectangular.
pub(crate) fn left_apply_mode(
    mat: &DMatrix<C64>,
    dims: &[usize],
    j: usize,
    u: &DMatrix<C64>,
) -> DMatrix<C64> {
    let outer: usize = dims[..j].iter().product();
    let inner: usize = dims[j + 1..].iter().product();
    let din = dims[j];
    let dout = u.nrows();
    debug_assert_eq!(u.ncols(), din);
    debug_assert_eq!(mat.nrows(), outer * din * inner);
    let cols = mat.ncols();
    let mut out = DMatrix::zeros(outer * dout * inner, cols);
    for c in 0..cols {
        let src = mat.column(c);
        let mut dst = out.column_mut(c);
        for o in 0..outer {
            for k in 0..din {
                let base_in = (o * din + k) * inner;
                for a in 0..dout {
                    let uak = u[(a, k)];
                    if uak == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let base_out = (o * dout + a) * inner;
                    for i in 0..inner {
                        dst[base_out + i] += uak * src[base_in + i];
                    }
                }
            }
        }
    }
    out
}

/// U_j ρ U_j† on mode j of a Hermitian matrix; U may be rectangular.
pub(crate) fn conjugate_mode(
    rho: &DMatrix<C64>,
    dims: &[usize],
    j: usize,
    u: &DMatrix<C64>,
) -> DMatrix<C64> {
    let a = left_apply_mode(rho, dims, j, u);
    // U (U ρ)† = U ρ U† for Hermitian ρ.
    left_apply_mode(&a.adjoint(), dims, j, u)
}
