use cvdistill::channels::*;
use cvdistill::fock::{covariance_from_fock, filtered_object, unfiltered_state, FockDensityMatrix};
use cvdistill::{GaussianFilter, GaussianState, SymmetricTwoMode};
use nalgebra::DMatrix;

#[test]
fn loss_closed_form_on_symmetric_states() {
    let (r, n) = (0.5f64, 1e-8);
    let ch = loss_thermal(22.0, 22.0, n).unwrap();
    let out = ch.apply_symmetric(&SymmetricTwoMode::two_mode_squeezed(r).unwrap());
    let t = (-1.0f64).exp();
    assert!((out.c() - (t * (2.0 * r).cosh() + (1.0 + 2.0 * n) * (1.0 - t))).abs() < 1e-15);
    assert!((out.s() - t * (2.0 * r).sinh()).abs() < 1e-15);
    let far = loss_thermal(1e4, 22.0, n).unwrap().apply(&SymmetricTwoMode::two_mode_squeezed(r).unwrap().covariance());
    assert!((far - DMatrix::identity(4, 4) * (1.0 + 2.0 * n)).amax() < 1e-12);
    let id = loss_thermal(0.0, 22.0, n).unwrap();
    assert_eq!(id.transmittance(), 1.0);
}

#[test]
fn loss_semigroup() {
    let g = SymmetricTwoMode::new(2.0, 1.5).unwrap().covariance();
    let a = loss_thermal(13.0, 22.0, 0.01).unwrap();
    let b = loss_thermal(29.0, 22.0, 0.01).unwrap();
    let ab = loss_thermal(42.0, 22.0, 0.01).unwrap();
    assert!((b.apply(&a.apply(&g)) - ab.apply(&g)).amax() < 1e-12);
    assert!((a.then(&b).apply(&g) - ab.apply(&g)).amax() < 1e-12);
}

#[test]
fn thermal_filter_semigroup() {
    let g = SymmetricTwoMode::new(2.2, 1.7).unwrap().covariance();
    let f = GaussianFilter::uniform(0.6, 2).unwrap();
    let once = filter_channel_cj(&f).unwrap();
    let doubled = filter_channel_cj(&f.scaled(2.0).unwrap()).unwrap();
    let twice = once.apply(&once.apply(&g).unwrap()).unwrap();
    assert!((twice - doubled.apply(&g).unwrap()).amax() < 1e-8);
}

#[test]
fn weak_filter_approaches_identity() {
    let g = SymmetricTwoMode::new(1.9, 1.4).unwrap().covariance();
    let f = GaussianFilter::uniform(1e-4, 2).unwrap();
    let out = filter_channel_cj(&f).unwrap().apply(&g).unwrap();
    assert!((out - &g).amax() < 1e-3);
    let ident = GaussianChannelCJ::identity(2, DEFAULT_S_REG).unwrap();
    assert!((ident.apply(&g).unwrap() - &g).amax() < 1e-2);
}

#[test]
fn limit_state_round_trip() {
    let f = GaussianFilter::uniform(1.0, 2).unwrap();
    let g = SymmetricTwoMode::new(1.5, 0.9).unwrap().covariance();
    let tau = filter_channel_cj(&f).unwrap().apply(&g).unwrap();
    let back = limit_state_cov(&tau, &f).unwrap();
    assert!(back.physical);
    assert!((back.covariance - g).amax() < 1e-8);
}

#[test]
fn limit_state_flags_unphysical_candidates() {
    // A τ covariance well below the filter's image of the vacuum inverts to an
    // unphysical candidate.
    let f = GaussianFilter::uniform(1.0, 1).unwrap();
    let tau = DMatrix::identity(2, 2) * 0.3;
    let out = limit_state_cov(&tau, &f).unwrap();
    assert!(!out.physical && out.margin < 0.0);
}

#[test]
fn limit_state_matches_fock_unfiltering() {
    // Γ_ρ from the covariance relation vs covariance of the Fock-space P⁻¹τP⁻¹.
    let f = GaussianFilter::uniform(1.0, 1).unwrap();
    let g_rho = DMatrix::from_row_slice(2, 2, &[1.7, 0.2, 0.2, 1.3]);
    let rho = FockDensityMatrix::from_gaussian(&GaussianState::centered(g_rho.clone()).unwrap(), 30).unwrap();
    let tau = filtered_object(&rho, &f).unwrap();
    let (_, g_tau) = covariance_from_fock(&tau).unwrap();
    let limit = limit_state_cov(&g_tau, &f).unwrap();
    let back = unfiltered_state(&tau.truncated(25).unwrap(), &f).unwrap();
    let (_, g_back) = covariance_from_fock(&back).unwrap();
    assert!((&limit.covariance - &g_back).amax() < 1e-6, "{} vs {}", limit.covariance, g_back);
    assert!((limit.covariance - g_rho).amax() < 1e-6);
}

#[test]
fn schur_output_is_symmetric_and_physical() {
    let f = GaussianFilter::uniform(0.8, 2).unwrap();
    let ch = filter_channel_cj(&f).unwrap();
    for (c, s) in [(1.0, 0.0), (1.5, 1.0), (3.0, 2.8)] {
        let out = ch.apply(&SymmetricTwoMode::new(c, s).unwrap().covariance()).unwrap();
        assert!((&out - out.transpose()).amax() < 1e-14);
        assert!(cvdistill::gaussian::physicality_margin(&out) > -1e-9);
    }
}
