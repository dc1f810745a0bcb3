//! Gaussifier protocols in the characteristic-function picture.
//!
//! One building block with reflectivity R maps filtered objects as
//! χ'(r) = χ_A(√(1−R) r) · χ_B(√R r). Recursive and pumping schedules both
//! produce the central-limit sequence χ_N(r) = χ_1(r/√N)^N; the compact
//! distillery keeps R = 1/2 and does not converge to a Gaussian.

mod convergence;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{charfun_numeric, covariance_from_fock, FockDensityMatrix};
use crate::gaussian::{gaussian_charfun_raw, GaussianState};
use crate::linalg;

pub use convergence::{
    fock_pumping_sequence, fock_recursive, matrix_element_convergence, moment_convergence_report,
    central_limit_moment, reference_finiteness_check, sup_deviation, sup_deviation_on,
    wick_moment, EvalGrid, FinitenessReport, MatrixElementReport, MatrixElementSeries,
    MomentReport, MomentSeries,
};

pub type Evaluator = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// An evaluatable characteristic function with its second-moment matrix.
#[derive(Clone)]
pub struct CharFunHandle {
    eval: Evaluator,
    modes: usize,
    gamma: DMatrix<f64>,
    zero_first_moments: bool,
}

impl fmt::Debug for CharFunHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CharFunHandle")
            .field("modes", &self.modes)
            .field("gamma", &self.gamma)
            .field("zero_first_moments", &self.zero_first_moments)
            .finish_non_exhaustive()
    }
}

impl CharFunHandle {
    pub fn new(
        modes: usize,
        gamma: DMatrix<f64>,
        zero_first_moments: bool,
        eval: Evaluator,
    ) -> Result<Self> {
        if modes == 0 {
            return Err(Error::param("modes", 0.0, "need at least one mode"));
        }
        if gamma.shape() != (2 * modes, 2 * modes) {
            return Err(Error::DimensionMismatch {
                expected: 2 * modes,
                found: gamma.nrows(),
            });
        }
        linalg::check_symmetric(&gamma, 1e-9)?;
        let at_zero = eval(&vec![0.0; 2 * modes]);
        if (at_zero - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
            return Err(Error::param(
                "chi(0)",
                at_zero.norm(),
                "characteristic function must equal 1 at the origin",
            ));
        }
        Ok(Self {
            eval,
            modes,
            gamma: linalg::symmetrize(&gamma),
            zero_first_moments,
        })
    }

    pub fn gaussian(state: &GaussianState) -> Self {
        let d = state.first_moments().clone();
        let gamma = state.covariance().clone();
        let g = gamma.clone();
        Self {
            eval: Arc::new(move |r| gaussian_charfun_raw(Some(&d), &g, r)),
            modes: state.modes(),
            gamma,
            zero_first_moments: state.first_moments().amax() == 0.0,
        }
    }

    /// Backed by a number-basis operator; evaluates tr[D(r)ρ]/tr ρ.
    pub fn from_fock(rho: &FockDensityMatrix) -> Result<Self> {
        let (d, gamma) = covariance_from_fock(rho)?;
        let rho = Arc::new(rho.normalize()?);
        let modes = rho.modes();
        Ok(Self {
            eval: Arc::new(move |r| charfun_numeric(&rho, r).expect("dimension checked by handle")),
            modes,
            gamma,
            zero_first_moments: d.amax() < 1e-12,
        })
    }

    /// Single-mode state diagonal in the number basis, Σ p_n |n⟩⟨n|, with
    /// χ(r) = Σ p_n L_n(|r|²/2) e^{−|r|²/4}.
    pub fn fock_diagonal(populations: &[f64]) -> Result<Self> {
        let total: f64 = populations.iter().sum();
        if populations.is_empty() || populations.iter().any(|&p| !(p >= 0.0)) || !(total > 0.0) {
            return Err(Error::param(
                "populations",
                total,
                "need non-negative populations with positive sum",
            ));
        }
        let p: Vec<f64> = populations.iter().map(|x| x / total).collect();
        let mean_n: f64 = p.iter().enumerate().map(|(n, &pn)| n as f64 * pn).sum();
        let gamma = DMatrix::identity(2, 2) * (2.0 * mean_n + 1.0);
        let eval: Evaluator = Arc::new(move |r| {
            let x = 0.5 * (r[0] * r[0] + r[1] * r[1]);
            let mut acc = 0.0;
            // Laguerre recurrence (k+1) L_{k+1} = (2k+1−x) L_k − k L_{k−1}.
            let (mut prev, mut cur) = (0.0, 1.0);
            for (n, &pn) in p.iter().enumerate() {
                if n > 0 {
                    let next = ((2.0 * (n - 1) as f64 + 1.0 - x) * cur - (n - 1) as f64 * prev) / n as f64;
                    prev = cur;
                    cur = next;
                }
                acc += pn * cur;
            }
            Complex64::new(acc * (-0.5 * x).exp(), 0.0)
        });
        Ok(Self {
            eval,
            modes: 1,
            gamma,
            zero_first_moments: true,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn second_moments(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn zero_first_moments(&self) -> bool {
        self.zero_first_moments
    }

    pub fn eval(&self, r: &[f64]) -> Result<Complex64> {
        if r.len() != 2 * self.modes {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.modes,
                found: r.len(),
            });
        }
        Ok((self.eval)(r))
    }

    /// Second moment ν = tr(H²τ) = rᵀΓr/2 along H = r·Q.
    pub fn nu(&self, direction: &[f64]) -> f64 {
        0.5 * linalg::quad_form(&self.gamma, direction)
    }
}

/// Gaussian limit exp(−rᵀΓr/4) of a central-limit sequence.
pub fn gaussian_limit(gamma: &DMatrix<f64>) -> Result<CharFunHandle> {
    linalg::check_symmetric(gamma, 1e-9)?;
    if gamma.nrows() == 0 || !gamma.nrows().is_multiple_of(2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: gamma.nrows(),
        });
    }
    let g = linalg::symmetrize(gamma);
    let gc = g.clone();
    Ok(CharFunHandle {
        eval: Arc::new(move |r| gaussian_charfun_raw(None, &gc, r)),
        modes: g.nrows() / 2,
        gamma: g,
        zero_first_moments: true,
    })
}

fn scale(r: &[f64], s: f64) -> Vec<f64> {
    r.iter().map(|x| x * s).collect()
}

/// One building block: χ'(r) = χ_A(√(1−R) r) χ_B(√R r), Γ' = (1−R)Γ_A + RΓ_B.
pub fn blockwise_charfun(
    a: &CharFunHandle,
    b: &CharFunHandle,
    reflectivity: f64,
) -> Result<CharFunHandle> {
    if a.modes != b.modes {
        return Err(Error::DimensionMismatch {
            expected: a.modes,
            found: b.modes,
        });
    }
    if !(0.0..=1.0).contains(&reflectivity) {
        return Err(Error::param("R", reflectivity, "reflectivity must lie in [0, 1]"));
    }
    let st = (1.0 - reflectivity).sqrt();
    let sr = reflectivity.sqrt();
    let (ea, eb) = (a.eval.clone(), b.eval.clone());
    Ok(CharFunHandle {
        eval: Arc::new(move |r| ea(&scale(r, st)) * eb(&scale(r, sr))),
        modes: a.modes,
        gamma: &a.gamma * (1.0 - reflectivity) + &b.gamma * reflectivity,
        zero_first_moments: a.zero_first_moments && b.zero_first_moments,
    })
}

/// z^n by binary exponentiation (repeated multiplication, no logarithms, so
/// no branch-cut ambiguity when χ winds around zero).
pub fn complex_powu(z: Complex64, n: u64) -> Complex64 {
    let mut base = z;
    let mut exp = n;
    let mut acc = Complex64::new(1.0, 0.0);
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base *= base;
        exp >>= 1;
    }
    acc
}

/// Recursive Gaussifier of depth n: χ_N(r) = χ_1(r/√N)^N with N = 2ⁿ.
pub fn recursive_charfun(chi1: &CharFunHandle, depth: u32) -> Result<CharFunHandle> {
    if depth > 62 {
        return Err(Error::param("n", depth as f64, "depth too large"));
    }
    central_limit(chi1, 1u64 << depth)
}

/// χ_1(r/√N)^N for any N ≥ 1.
pub fn central_limit(chi1: &CharFunHandle, n: u64) -> Result<CharFunHandle> {
    if n == 0 {
        return Err(Error::param("N", 0.0, "need at least one copy"));
    }
    if n == 1 {
        return Ok(chi1.clone());
    }
    let e = chi1.eval.clone();
    let s = 1.0 / (n as f64).sqrt();
    Ok(CharFunHandle {
        eval: Arc::new(move |r| complex_powu(e(&scale(r, s)), n)),
        modes: chi1.modes,
        gamma: chi1.gamma.clone(),
        zero_first_moments: chi1.zero_first_moments,
    })
}

/// Pumping step with R_N = 1/(N+1): maps χ_N to χ_{N+1}.
pub fn pumping_step(chi_n: &CharFunHandle, chi1: &CharFunHandle, n: usize) -> Result<CharFunHandle> {
    if n == 0 {
        return Err(Error::param("N", 0.0, "pumping step index starts at 1"));
    }
    blockwise_charfun(chi_n, chi1, 1.0 / (n as f64 + 1.0))
}

/// Compact-distillery step: constant R = 1/2 with the fixed pump χ_1.
pub fn compact_step(phi_n: &CharFunHandle, phi1: &CharFunHandle) -> Result<CharFunHandle> {
    blockwise_charfun(phi_n, phi1, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    /// All 2ⁿ copies stored and combined level by level.
    Recursive,
    /// The same tree evaluated depth-first, storing n+1 modes per location.
    ReorderedRecursive,
    Pumping,
    Compact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProtocolSchedule {
    kind: ProtocolKind,
    copies: usize,
}

impl ProtocolSchedule {
    pub fn new(kind: ProtocolKind, copies: usize) -> Result<Self> {
        if copies == 0 {
            return Err(Error::param("N", 0.0, "need at least one copy"));
        }
        if matches!(kind, ProtocolKind::Recursive | ProtocolKind::ReorderedRecursive)
            && !copies.is_power_of_two()
        {
            return Err(Error::NotPowerOfTwo(copies));
        }
        Ok(Self { kind, copies })
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    /// n = log₂ N for the recursive kinds.
    pub fn depth(&self) -> Option<u32> {
        match self.kind {
            ProtocolKind::Recursive | ProtocolKind::ReorderedRecursive => {
                Some(self.copies.trailing_zeros())
            }
            _ => None,
        }
    }

    /// Output characteristic function of the schedule applied to χ_1.
    pub fn run(&self, chi1: &CharFunHandle) -> Result<CharFunHandle> {
        match self.kind {
            ProtocolKind::Recursive | ProtocolKind::ReorderedRecursive => {
                let mut chi = chi1.clone();
                for _ in 0..self.depth().expect("recursive") {
                    chi = blockwise_charfun(&chi, &chi, 0.5)?;
                }
                Ok(chi)
            }
            ProtocolKind::Pumping => {
                let mut chi = chi1.clone();
                for n in 1..self.copies {
                    chi = pumping_step(&chi, chi1, n)?;
                }
                Ok(chi)
            }
            ProtocolKind::Compact => {
                let mut chi = chi1.clone();
                for _ in 1..self.copies {
                    chi = compact_step(&chi, chi1)?;
                }
                Ok(chi)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResourceProfile {
    pub memory_modes_per_location: usize,
    pub time_steps: usize,
    pub raw_copies: usize,
}

/// Memory, sequential building-block steps and raw copies of a schedule.
pub fn resource_profile(schedule: &ProtocolSchedule) -> ResourceProfile {
    let n_copies = schedule.copies;
    let (memory, steps) = match schedule.kind {
        ProtocolKind::Recursive => (n_copies, schedule.depth().expect("recursive") as usize),
        ProtocolKind::ReorderedRecursive => (
            schedule.depth().expect("recursive") as usize + 1,
            n_copies - 1,
        ),
        ProtocolKind::Pumping | ProtocolKind::Compact => (n_copies.min(2), n_copies - 1),
    };
    ResourceProfile {
        memory_modes_per_location: memory,
        time_steps: steps,
        raw_copies: n_copies,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powu_matches_repeated_product() {
        let z = Complex64::new(-0.3, 0.8);
        let mut p = Complex64::new(1.0, 0.0);
        for n in 0..40u64 {
            assert!((complex_powu(z, n) - p).norm() < 1e-14);
            p *= z;
        }
    }

    #[test]
    fn laguerre_charfun_of_single_photon() {
        let h = CharFunHandle::fock_diagonal(&[0.0, 1.0]).unwrap();
        for &(x, p) in &[(0.2, 0.4), (1.0, 1.0), (2.0, -0.3)] {
            let r2: f64 = x * x + p * p;
            let expect = (1.0 - r2 / 2.0) * (-r2 / 4.0).exp();
            assert!((h.eval(&[x, p]).unwrap().re - expect).abs() < 1e-15);
        }
        assert_eq!(h.second_moments()[(0, 0)], 3.0);
    }

    #[test]
    fn schedules_and_resources() {
        assert!(ProtocolSchedule::new(ProtocolKind::Recursive, 6).is_err());
        let rec = ProtocolSchedule::new(ProtocolKind::Recursive, 8).unwrap();
        let reo = ProtocolSchedule::new(ProtocolKind::ReorderedRecursive, 8).unwrap();
        let pump = ProtocolSchedule::new(ProtocolKind::Pumping, 8).unwrap();
        assert_eq!(
            resource_profile(&rec),
            ResourceProfile { memory_modes_per_location: 8, time_steps: 3, raw_copies: 8 }
        );
        assert_eq!(
            resource_profile(&reo),
            ResourceProfile { memory_modes_per_location: 4, time_steps: 7, raw_copies: 8 }
        );
        assert_eq!(
            resource_profile(&pump),
            ResourceProfile { memory_modes_per_location: 2, time_steps: 7, raw_copies: 8 }
        );
        assert!(ProtocolSchedule::new(ProtocolKind::Pumping, 3).is_ok());
    }

    #[test]
    fn blockwise_limits() {
        let one = CharFunHandle::fock_diagonal(&[0.2, 0.8]).unwrap();
        let vac = gaussian_limit(&DMatrix::identity(2, 2)).unwrap();
        let r0 = blockwise_charfun(&one, &vac, 0.0).unwrap();
        let p = [0.7, -0.4];
        assert_eq!(r0.eval(&p).unwrap(), one.eval(&p).unwrap());
        let fixed = blockwise_charfun(&vac, &vac, 0.5).unwrap();
        assert!((fixed.eval(&p).unwrap() - vac.eval(&p).unwrap()).norm() < 1e-15);
        assert!(blockwise_charfun(&one, &vac, 1.5).is_err());
    }
}
