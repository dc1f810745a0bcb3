//! Gaussian channels acting on covariance matrices.
//!
//! A Gaussian CP map is described by the covariance matrix γ of the partial
//! transpose of its Choi–Jamiołkowski state, split into output (A) and input
//! (B) blocks. Its action is the Schur complement
//! Γ' = γ_AA − γ_AB (γ_BB + Γ)⁻¹ γ_ABᵀ.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{physicality_margin, GaussianFilter, SymmetricTwoMode, PHYSICALITY_TOL};
use crate::linalg;

/// Default two-mode-squeezing parameter λ = tanh r regularising the
/// unnormalisable maximally entangled state in identity-channel blocks.
pub const DEFAULT_S_REG: f64 = 0.9999;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannelCJ {
    gaa: DMatrix<f64>,
    gab: DMatrix<f64>,
    gbb: DMatrix<f64>,
}

impl GaussianChannelCJ {
    pub fn new(gaa: DMatrix<f64>, gab: DMatrix<f64>, gbb: DMatrix<f64>) -> Result<Self> {
        let n = gaa.nrows();
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: n,
            });
        }
        for m in [&gaa, &gab, &gbb] {
            if m.shape() != (n, n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.nrows().max(m.ncols()),
                });
            }
        }
        linalg::check_symmetric(&gaa, 1e-9)?;
        linalg::check_symmetric(&gbb, 1e-9)?;
        Ok(Self {
            gaa: linalg::symmetrize(&gaa),
            gab,
            gbb: linalg::symmetrize(&gbb),
        })
    }

    /// Identity channel on m modes, from a two-mode squeezed state with
    /// λ = tanh r = `s_reg` per mode (exact in the limit s_reg → 1).
    pub fn identity(m: usize, s_reg: f64) -> Result<Self> {
        if !(s_reg > 0.0 && s_reg < 1.0) {
            return Err(Error::param("s_reg", s_reg, "regularisation must lie in (0, 1)"));
        }
        let l2 = s_reg * s_reg;
        let c = (1.0 + l2) / (1.0 - l2);
        let s = 2.0 * s_reg / (1.0 - l2);
        let id = DMatrix::identity(2 * m, 2 * m);
        Self::new(&id * c, &id * s, &id * c)
    }

    pub fn modes(&self) -> usize {
        self.gaa.nrows() / 2
    }

    pub fn gamma_aa(&self) -> &DMatrix<f64> {
        &self.gaa
    }

    pub fn gamma_ab(&self) -> &DMatrix<f64> {
        &self.gab
    }

    pub fn gamma_bb(&self) -> &DMatrix<f64> {
        &self.gbb
    }

    /// The assembled 4m × 4m matrix [[γ_AA, γ_AB], [γ_ABᵀ, γ_BB]].
    pub fn assembled(&self) -> DMatrix<f64> {
        let n = self.gaa.nrows();
        let mut g = DMatrix::zeros(2 * n, 2 * n);
        g.view_mut((0, 0), (n, n)).copy_from(&self.gaa);
        g.view_mut((0, n), (n, n)).copy_from(&self.gab);
        g.view_mut((n, 0), (n, n)).copy_from(&self.gab.transpose());
        g.view_mut((n, n), (n, n)).copy_from(&self.gbb);
        g
    }

    /// Γ ↦ γ_AA − γ_AB (γ_BB + Γ)⁻¹ γ_ABᵀ.
    pub fn apply(&self, gamma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if gamma.shape() != self.gbb.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.gbb.nrows(),
                found: gamma.nrows(),
            });
        }
        linalg::check_symmetric(gamma, 1e-9)?;
        let inv = linalg::checked_inverse(&(&self.gbb + gamma))?;
        let out = &self.gaa - &self.gab * inv * self.gab.transpose();
        Ok(linalg::symmetrize(&out))
    }
}

/// Free-function form of [`GaussianChannelCJ::apply`].
pub fn apply_gaussian_channel(ch: &GaussianChannelCJ, gamma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ch.apply(gamma)
}

/// CJ blocks of ρ ↦ PρP for a filter P = V exp(−Σβ_j n_j/2) V†.
///
/// (P ⊗ 1)|Φ⟩ is a normalisable two-mode squeezed state with λ_j = e^{−β_j/2},
/// so no regularisation is needed: per mode γ_AA = γ_BB = coth(β/2) G and
/// γ_AB = G / sinh(β/2), with G = M_V M_Vᵀ.
pub fn filter_channel_cj(filter: &GaussianFilter) -> Result<GaussianChannelCJ> {
    let m = filter.modes();
    let mut diag_c = DMatrix::zeros(2 * m, 2 * m);
    let mut diag_s = DMatrix::zeros(2 * m, 2 * m);
    for (j, &b) in filter.betas().iter().enumerate() {
        let c = 1.0 / (0.5 * b).tanh();
        let s = 1.0 / (0.5 * b).sinh();
        for q in 0..2 {
            diag_c[(2 * j + q, 2 * j + q)] = c;
            diag_s[(2 * j + q, 2 * j + q)] = s;
        }
    }
    let mv = filter.mode_unitary().matrix();
    let gaa = mv * &diag_c * mv.transpose();
    let gab = mv * &diag_s * mv.transpose();
    GaussianChannelCJ::new(gaa.clone(), gab, gaa)
}

/// Candidate covariance of the physical limit state, with its physicality.
#[derive(Debug, Clone, Serialize)]
pub struct LimitState {
    #[serde(skip)]
    pub covariance: DMatrix<f64>,
    /// Minimum eigenvalue of Γ + iΩ.
    pub margin: f64,
    pub physical: bool,
}

/// Inverts the filter action: Γ_ρ∞ = γ_ABᵀ (γ_AA − Γ_τ∞)⁻¹ γ_AB − γ_BB.
///
/// The result need not be a physical covariance matrix; that is reported,
/// not hidden.
pub fn limit_state_cov(gamma_tau: &DMatrix<f64>, filter: &GaussianFilter) -> Result<LimitState> {
    let ch = filter_channel_cj(filter)?;
    if gamma_tau.shape() != ch.gaa.shape() {
        return Err(Error::DimensionMismatch {
            expected: ch.gaa.nrows(),
            found: gamma_tau.nrows(),
        });
    }
    linalg::check_symmetric(gamma_tau, 1e-9)?;
    let inv = linalg::checked_inverse(&(&ch.gaa - gamma_tau))?;
    let covariance = linalg::symmetrize(&(ch.gab.transpose() * inv * &ch.gab - &ch.gbb));
    let margin = physicality_margin(&covariance);
    Ok(LimitState {
        covariance,
        margin,
        physical: margin >= -PHYSICALITY_TOL,
    })
}

/// Attenuation with thermal admixture: Γ ↦ T Γ + (1 + 2 n_th)(1 − T) I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossThermal {
    transmittance: f64,
    n_th: f64,
}

impl LossThermal {
    pub fn with_transmittance(transmittance: f64, n_th: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&transmittance) {
            return Err(Error::param(
                "transmittance",
                transmittance,
                "must lie in [0, 1]",
            ));
        }
        if !(n_th >= 0.0) || !n_th.is_finite() {
            return Err(Error::param("n_th", n_th, "must be finite and non-negative"));
        }
        Ok(Self {
            transmittance,
            n_th,
        })
    }

    pub fn transmittance(&self) -> f64 {
        self.transmittance
    }

    pub fn n_th(&self) -> f64 {
        self.n_th
    }

    /// Additive noise (1 + 2n_th)(1 − T).
    pub fn noise(&self) -> f64 {
        (1.0 + 2.0 * self.n_th) * (1.0 - self.transmittance)
    }

    pub fn apply(&self, gamma: &DMatrix<f64>) -> DMatrix<f64> {
        let n = gamma.nrows();
        gamma * self.transmittance + DMatrix::identity(n, n) * self.noise()
    }

    /// Action on the symmetric two-mode form (both modes through the channel).
    pub fn apply_symmetric(&self, s: &SymmetricTwoMode) -> SymmetricTwoMode {
        SymmetricTwoMode::new(
            self.transmittance * s.c() + self.noise(),
            self.transmittance * s.s(),
        )
        .expect("loss channels preserve physicality")
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &LossThermal) -> LossThermal {
        let t = self.transmittance * next.transmittance;
        // Combined noise T₂ N₁ + N₂, expressed through an effective n_th.
        let noise = next.transmittance * self.noise() + next.noise();
        let n_th = if t < 1.0 {
            0.5 * (noise / (1.0 - t) - 1.0)
        } else {
            0.0
        };
        LossThermal {
            transmittance: t,
            n_th: n_th.max(0.0),
        }
    }
}

/// Fibre of length l: T = e^{−l/l_att}.
pub fn loss_thermal(l: f64, l_att: f64, n_th: f64) -> Result<LossThermal> {
    if !(l >= 0.0) {
        return Err(Error::param("l", l, "distance must be non-negative"));
    }
    if !(l_att > 0.0) {
        return Err(Error::param("l_att", l_att, "attenuation length must be positive"));
    }
    LossThermal::with_transmittance((-l / l_att).exp(), n_th)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::GaussianState;

    #[test]
    fn filter_fixes_vacuum() {
        let f = GaussianFilter::uniform(1.3, 2).unwrap();
        let ch = filter_channel_cj(&f).unwrap();
        let out = ch.apply(&DMatrix::identity(4, 4)).unwrap();
        assert!((out - DMatrix::identity(4, 4)).amax() < 1e-12);
    }

    #[test]
    fn identity_channel_within_regularisation() {
        let ch = GaussianChannelCJ::identity(1, DEFAULT_S_REG).unwrap();
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.5]);
        let out = ch.apply(&g).unwrap();
        assert!((out - &g).amax() < 1e-3);
    }

    #[test]
    fn filter_semigroup() {
        let f = GaussianFilter::uniform(0.7, 2).unwrap();
        let f2 = f.scaled(2.0).unwrap();
        let g = SymmetricTwoMode::two_mode_squeezed(0.4).unwrap().covariance();
        let once = filter_channel_cj(&f).unwrap();
        let twice = once.apply(&once.apply(&g).unwrap()).unwrap();
        let direct = filter_channel_cj(&f2).unwrap().apply(&g).unwrap();
        assert!((twice - direct).amax() < 1e-8);
    }

    #[test]
    fn limit_state_inverts_filter() {
        let f = GaussianFilter::uniform(1.0, 2).unwrap();
        let g = SymmetricTwoMode::new(2.0, 1.2).unwrap().covariance();
        let tau = filter_channel_cj(&f).unwrap().apply(&g).unwrap();
        let back = limit_state_cov(&tau, &f).unwrap();
        assert!(back.physical);
        assert!((back.covariance - g).amax() < 1e-8);
    }

    #[test]
    fn loss_semigroup_and_limits() {
        let a = loss_thermal(10.0, 22.0, 1e-3).unwrap();
        let b = loss_thermal(15.0, 22.0, 1e-3).unwrap();
        let ab = loss_thermal(25.0, 22.0, 1e-3).unwrap();
        let g = GaussianState::vacuum(1).unwrap().covariance() * 3.0;
        let seq = b.apply(&a.apply(&g));
        assert!((seq - ab.apply(&g)).amax() < 1e-12);
        assert!((a.then(&b).transmittance() - ab.transmittance()).abs() < 1e-15);
        assert!(loss_thermal(0.0, 22.0, 0.1).unwrap().apply(&g) == g);
    }
}
