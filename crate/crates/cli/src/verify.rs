//! `verify`: fast analytic and cross-representation self-checks.

use cvdistill::channels::filter_channel_cj;
use cvdistill::fock::{
    conjugation_residual, covariance_from_fock, epsilon_fock, filtered_object, moment,
    photon_replacement, FockDensityMatrix, MomentSpec,
};
use cvdistill::protocols::{
    compact_step, sup_deviation_on, CharFunHandle, EvalGrid, ProtocolKind, ProtocolSchedule,
};
use cvdistill::repeater::{
    direct_lmax, epsilon_symmetric, swap, transmit, LinkState, DEFAULT_L_ATT, DEFAULT_N_TH,
};
use cvdistill::{GaussianFilter, Result, SymmetricTwoMode};
use nalgebra::{DMatrix, Matrix2};

use crate::config::{invalid, Config};
use crate::CliError;

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

/// Which swap implementation the swap oracle is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SwapUnderTest {
    Library,
    /// Deliberately wrong sign in the C update, to prove the check can fail.
    SignFault,
}

impl SwapUnderTest {
    fn apply(self, s: &LinkState) -> Result<LinkState> {
        match self {
            Self::Library => swap(s),
            Self::SignFault => {
                let (x, y) = (s.c(), s.s());
                let y2 = y * y / (2.0 * x);
                SymmetricTwoMode::new(x + y2, y2)
            }
        }
    }
}

fn conjugation_lemma(cutoff: usize) -> Result<Check> {
    let cutoffs: Vec<usize> = [cutoff.saturating_sub(6), cutoff.saturating_sub(3), cutoff]
        .into_iter()
        .map(|d| d.max(3))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for refl in [0.25, 0.5] {
        let res = cutoffs
            .iter()
            .map(|&d| conjugation_residual(1.0, refl, d))
            .collect::<Result<Vec<_>>>()?;
        ok &= res.windows(2).all(|w| w[1].frobenius < w[0].frobenius);
        ok &= res.iter().all(|x| x.frobenius <= x.leakage_bound * (1.0 + 1e-9) + 1e-14);
        let last = res.last().expect("non-empty");
        parts.push(format!("R={refl}: {:.2e} at d={} (bound {:.2e})", last.frobenius, last.cutoff, last.leakage_bound));
    }
    Ok(Check {
        name: "conjugation-lemma",
        passed: ok,
        detail: format!("cutoffs {cutoffs:?}; {}", parts.join("; ")),
    })
}

fn wick() -> Result<Check> {
    let rho = FockDensityMatrix::from_gaussian(&SymmetricTwoMode::new(1.6, 1.0)?.embed(), 25)?;
    let mut worst = 0.0f64;
    for i in 0..4 {
        let mut dir = vec![0.0; 4];
        dir[i] = 1.0;
        dir[(i + 2) % 4] = 0.5;
        let nu = moment(&rho, &MomentSpec::power(&dir, 2)?)?.re;
        for k in [3usize, 4, 6] {
            let m = moment(&rho, &MomentSpec::power(&dir, k)?)?.re;
            let expect = if k % 2 == 1 {
                0.0
            } else {
                (1..k).step_by(2).map(|x| x as f64).product::<f64>() * nu.powi(k as i32 / 2)
            };
            worst = worst.max((m - expect).abs());
        }
    }
    Ok(Check {
        name: "wick",
        passed: worst <= 1e-8,
        detail: format!("max Gaussian moment residual {worst:.2e} (tol 1e-8)"),
    })
}

fn pumping_recursive() -> Result<Check> {
    let inputs = [
        CharFunHandle::fock_diagonal(&[0.0, 1.0])?,
        CharFunHandle::fock_diagonal(&[0.5, 0.2, 0.3])?,
    ];
    let mut worst = 0.0f64;
    for chi1 in &inputs {
        let grid = EvalGrid::standard(chi1.modes(), EvalGrid::DEFAULT_R0)?;
        for n in [2usize, 4, 8, 16] {
            let pump = ProtocolSchedule::new(ProtocolKind::Pumping, n)?.run(chi1)?;
            let rec = ProtocolSchedule::new(ProtocolKind::Recursive, n)?.run(chi1)?;
            worst = worst.max(sup_deviation_on(&pump, &rec, &grid)?);
        }
    }
    Ok(Check {
        name: "pumping-recursive",
        passed: worst <= 1e-12,
        detail: format!("max |chi_pump - chi_rec| over N=2..16 = {worst:.2e} (tol 1e-12)"),
    })
}

fn zero_persistence() -> Result<Check> {
    let phi1 = CharFunHandle::fock_diagonal(&[0.0, 1.0])?;
    let zero = phi1.eval(&[std::f64::consts::SQRT_2, 0.0])?.norm();
    let mut phi = phi1.clone();
    let mut worst = 0.0f64;
    for _ in 2..=16 {
        phi = compact_step(&phi, &phi1)?;
        worst = worst.max(phi.eval(&[2.0, 0.0])?.norm());
    }
    Ok(Check {
        name: "zero-persistence",
        passed: zero < 1e-14 && worst < 1e-10,
        detail: format!("|phi_1(r0)| = {zero:.1e}; max |phi_N(sqrt2 r0)| = {worst:.2e} (tol 1e-10)"),
    })
}

fn schur_vs_fock() -> Result<Check> {
    let filter = GaussianFilter::uniform(1.0, 2)?;
    let g_in = SymmetricTwoMode::two_mode_squeezed(0.5)?.covariance();
    let rho = FockDensityMatrix::tmsv(0.5, 30)?;
    let (_, g_fock) = covariance_from_fock(&filtered_object(&rho, &filter)?)?;
    let g_schur = filter_channel_cj(&filter)?.apply(&g_in)?;
    let dev = (g_fock - g_schur).amax();
    Ok(Check {
        name: "schur-vs-fock",
        passed: dev <= 1e-6,
        detail: format!("filtered covariance Fock vs Schur {dev:.2e} (tol 1e-6)"),
    })
}

fn boundary_consistency() -> Result<Check> {
    let mut worst = 0.0f64;
    for r in [0.25, 0.5, 1.0, 2.0] {
        let l = direct_lmax(r, DEFAULT_L_ATT, DEFAULT_N_TH)?.expect("positive thermal noise");
        worst = worst.max((transmit(r, l, DEFAULT_L_ATT, DEFAULT_N_TH)?.duan_delta() - 1.0).abs());
    }
    Ok(Check {
        name: "boundary-consistency",
        passed: worst <= 1e-9,
        detail: format!("max |Delta(L_max) - 1| = {worst:.2e} (tol 1e-9)"),
    })
}

fn epsilon_invariance() -> Result<Check> {
    let link = transmit(0.5, 30.0, DEFAULT_L_ATT, DEFAULT_N_TH)?;
    let eps = epsilon_symmetric(&link)?;
    let rho = FockDensityMatrix::from_gaussian(&link.embed(), 20)?;
    let e_fock = epsilon_fock(&rho)?;
    let (replaced, _) = photon_replacement(&rho, 0.9)?;
    let e_rep = epsilon_fock(&replaced)?;
    let worst = (e_fock - eps).abs().max((e_rep - eps).abs());
    Ok(Check {
        name: "epsilon-invariance",
        passed: worst <= 1e-6,
        detail: format!("epsilon {eps:.8}; Fock {e_fock:.8}; after photon replacement {e_rep:.8} (tol 1e-6)"),
    })
}

/// Entanglement swap from first principles: two copies on (A,B1),(B2,C), a
/// balanced beam splitter on B1,B2, homodyne of x on one port and p on the
/// other, and the Schur complement onto (A,C).
fn homodyne_swap(s: &LinkState) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(8, 8);
    let one = s.covariance();
    g.view_mut((0, 0), (4, 4)).copy_from(&one);
    g.view_mut((4, 4), (4, 4)).copy_from(&one);
    // Mode order A, B1, B2, C; quadrature order (x, p) per mode.
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut bs = DMatrix::identity(8, 8);
    let block = Matrix2::new(h, h, -h, h);
    for q in 0..2 {
        let (i, j) = (2 + q, 4 + q);
        bs[(i, i)] = block[(0, 0)];
        bs[(i, j)] = block[(0, 1)];
        bs[(j, i)] = block[(1, 0)];
        bs[(j, j)] = block[(1, 1)];
    }
    let g = &bs * g * bs.transpose();
    let kept = [0usize, 1, 6, 7];
    let measured = [2usize, 5]; // x of port 1, p of port 2
    let pick = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| g[(rows[i], cols[j])])
    };
    let gkk = pick(&kept, &kept);
    let gkm = pick(&kept, &measured);
    let gmm = pick(&measured, &measured);
    let inv = gmm.try_inverse().expect("homodyne block is positive definite");
    &gkk - &gkm * inv * gkm.transpose()
}

/// Local-symplectic invariants of a two-mode covariance: det A, det B, det C, det Γ.
fn invariants(g: &DMatrix<f64>) -> [f64; 4] {
    let blk = |r: usize, c: usize| g.view((r, c), (2, 2)).into_owned().determinant();
    [blk(0, 0), blk(2, 2), blk(0, 2), g.determinant()]
}

fn swap_oracle(under_test: SwapUnderTest) -> Result<Check> {
    let mut worst = 0.0f64;
    for r in [0.2, 0.6, 1.2] {
        for span in [5.0, 40.0, 120.0] {
            let link = transmit(r, span, DEFAULT_L_ATT, 0.05)?;
            let oracle = invariants(&homodyne_swap(&link));
            let lib = invariants(&under_test.apply(&link)?.covariance());
            for (a, b) in oracle.iter().zip(&lib) {
                worst = worst.max((a - b).abs() / a.abs().max(1.0));
            }
        }
    }
    Ok(Check {
        name: "swap-oracle",
        passed: worst <= 1e-10,
        detail: format!("max relative invariant mismatch vs homodyne Schur complement {worst:.2e} (tol 1e-10)"),
    })
}

pub fn run(mut cfg: Config) -> std::result::Result<(), CliError> {
    let cutoff: usize = cfg.take("cutoff", 25usize)?;
    let fault: String = cfg.take("fault", "none".to_string())?;
    cfg.finish()?;
    if cutoff < 3 {
        return Err(invalid("cutoff", cutoff, "need at least 3 levels per mode").into());
    }
    let swap_impl = match fault.as_str() {
        "none" => SwapUnderTest::Library,
        "swap_sign" => SwapUnderTest::SignFault,
        other => return Err(invalid("fault", other, "expected none or swap_sign").into()),
    };
    let checks = [
        conjugation_lemma(cutoff)?,
        wick()?,
        pumping_recursive()?,
        zero_persistence()?,
        schur_vs_fock()?,
        boundary_consistency()?,
        epsilon_invariance()?,
        swap_oracle(swap_impl)?,
    ];
    let mut failed = Vec::new();
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        if !c.passed {
            failed.push(c.name.to_string());
        }
    }
    if failed.is_empty() {
        println!("all {} checks passed", checks.len());
        Ok(())
    } else {
        Err(CliError::ChecksFailed(failed))
    }
}
