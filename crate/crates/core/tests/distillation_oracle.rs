//! The closed-form distilled state against the full Fock pipeline: photon
//! replacement followed by Gaussifier rounds with a near-vacuum filter.

use cvdistill::fock::{
    building_block, covariance_from_fock, epsilon_fock, lambda_fock, photon_replacement,
    FockDensityMatrix,
};
use cvdistill::repeater::{distilled_state, epsilon_symmetric, transmit};
use cvdistill::GaussianFilter;

#[test]
fn fock_gaussifier_converges_to_distilled_state() {
    let link = transmit(0.5, 44.0, 22.0, 1e-8).unwrap();
    let eps = epsilon_symmetric(&link).unwrap();
    let rho = FockDensityMatrix::from_gaussian(&link.embed(), 10).unwrap();
    let (mut state, _) = photon_replacement(&rho, 0.9).unwrap();
    let lambda = lambda_fock(&state).unwrap();
    assert!((epsilon_fock(&state).unwrap() - eps).abs() < 1e-8);
    let target = distilled_state(eps, lambda).unwrap();

    let filter = GaussianFilter::uniform(20.0, 2).unwrap();
    for _ in 0..4 {
        state = building_block(&state, &state, 0.5, &filter).unwrap().0;
        // ε and Λ are invariant under the Fock-diagonal Gaussifier round.
        assert!((epsilon_fock(&state).unwrap() - eps).abs() < 1e-8);
        assert!((lambda_fock(&state).unwrap() - lambda).abs() < 1e-8);
    }
    let (_, g) = covariance_from_fock(&state).unwrap();
    assert!((g[(0, 0)] - target.c()).abs() < 2e-2, "C {} vs {}", g[(0, 0)], target.c());
    assert!((g[(0, 2)] - target.s()).abs() < 2e-2, "S {} vs {}", g[(0, 2)], target.s());
}
