use cvdistill::fock::{epsilon_fock, FockDensityMatrix};
use cvdistill::repeater::*;
use cvdistill::SymmetricTwoMode;
use proptest::prelude::*;

const L_ATT: f64 = 22.0;
const N_TH: f64 = 1e-8;

/// Δ = 1 root of the direct link found by bisection on the closed-form transmit.
fn bisect_direct(r: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 5000.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if transmit(r, mid, L_ATT, N_TH).unwrap().duan_delta() < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[test]
fn direct_lmax_matches_root_of_delta() {
    for r in [0.1, 0.25, 0.5, 1.0, 2.0, 3.0] {
        let l = direct_lmax(r, L_ATT, N_TH).unwrap().unwrap();
        assert!((l - bisect_direct(r)).abs() < 1e-6, "r={r}");
    }
}

#[test]
fn direct_lmax_pinned_values() {
    // 44 ln((2e-8 + 1 - e^{-2}) / 2e-8) evaluated independently.
    let expect = 44.0 * ((2e-8 + 1.0 - (-2.0f64).exp()) / 2e-8).ln();
    let l = direct_lmax(1.0, L_ATT, N_TH).unwrap().unwrap();
    assert!((l - expect).abs() < 1e-9);
    assert!((l - 773.6).abs() < 0.1, "{l}");
    let mut prev = 0.0;
    for i in 0..=29 {
        let l = direct_lmax(0.1 + 0.1 * i as f64, L_ATT, N_TH).unwrap().unwrap();
        assert!(l > prev);
        prev = l;
    }
    assert_eq!(direct_lmax(1.0, L_ATT, 0.0).unwrap(), None);
}

#[test]
fn transmit_matches_loss_formula() {
    // Each mode travels span/2: T = e^{-span/(2 l_att)}.
    let (r, span) = (0.5f64, 44.0);
    let t = (-1.0f64).exp();
    let s = transmit(r, span, L_ATT, N_TH).unwrap();
    assert!((s.c() - (t * (2.0 * r).cosh() + (1.0 + 2.0 * N_TH) * (1.0 - t))).abs() < 1e-14);
    assert!((s.s() - t * (2.0 * r).sinh()).abs() < 1e-14);
}

#[test]
fn epsilon_matches_fock_matrix_elements() {
    let s = transmit(0.5, 22.0, L_ATT, N_TH).unwrap();
    let rho = FockDensityMatrix::from_gaussian(&s.embed(), 25).unwrap();
    let e_fock = epsilon_fock(&rho).unwrap();
    let e = epsilon_symmetric(&s).unwrap();
    assert!((e - e_fock).abs() < 1e-6, "{e} vs {e_fock}");
    assert!(epsilon_symmetric(&SymmetricTwoMode::two_mode_squeezed(0.7).unwrap()).unwrap() < 1e-12);
}

#[test]
fn epsilon_increases_with_distance() {
    let mut prev = -1.0;
    for i in 0..50 {
        let e = epsilon_symmetric(&transmit(0.6, 10.0 * i as f64, L_ATT, N_TH).unwrap()).unwrap();
        assert!(e > prev || (i == 0 && e >= 0.0));
        prev = e;
    }
}

#[test]
fn station_loss_halves_s_and_raises_delta() {
    let s = transmit(0.8, 30.0, L_ATT, N_TH).unwrap();
    let t = station_loss(&s, N_TH).unwrap();
    assert_eq!(t.s(), 0.5 * s.s());
    assert!(t.duan_delta() > s.duan_delta());
    let v = station_loss(&SymmetricTwoMode::new(1.0, 0.0).unwrap(), N_TH).unwrap();
    assert!((v.c() - 1.0).abs() <= 2.0 * N_TH && v.s() == 0.0);
}

#[test]
fn distilled_state_physical_across_admissible_interval() {
    for eps in [0.0, 0.05, 0.4, 2.0] {
        let bound = 1.0 / (1.0 + eps);
        for i in 1..=100 {
            let lambda = bound * i as f64 / 101.0;
            let s = distilled_state(eps, lambda).unwrap();
            assert!(s.c() * s.c() >= 1.0 + s.s() * s.s() - 1e-9 * s.c() * s.c());
            if eps == 0.0 {
                // Pure in, pure out.
                let excess = (s.c() - 1.0) * (s.c() + 1.0) - s.s() * s.s();
                assert!(excess.abs() < 1e-9 * s.c() * s.c());
            }
        }
        assert!(distilled_state(eps, bound).is_err());
    }
    let tiny = distilled_state(0.0, 1e-9).unwrap();
    assert!((tiny.c() - 1.0).abs() < 1e-12 && tiny.s() < 1e-8);
}

#[test]
fn swap_never_creates_entanglement() {
    for i in 0..50 {
        for j in 0..50 {
            let c = 1.0 + 0.2 * i as f64;
            let s = (c * c - 1.0).sqrt() * j as f64 / 49.0;
            let st = SymmetricTwoMode::new(c, s).unwrap();
            let out = swap(&st).unwrap();
            assert!(out.duan_delta() >= st.duan_delta() - 1e-12);
            // The output still has the symmetric form and is physical.
            assert!(SymmetricTwoMode::new(out.c(), out.s()).is_ok());
        }
    }
}

#[test]
fn chain_depth_zero_is_distilled_link() {
    let cfg = RepeaterConfig::new(0.4, 0, 300.0, Variant::I).unwrap();
    let link = transmit(0.4, 300.0, L_ATT, N_TH).unwrap();
    let eps = epsilon_symmetric(&link).unwrap();
    let expect = distilled_state(eps, 0.99 / (1.0 + eps)).unwrap();
    assert!((chain_delta(&cfg).unwrap() - expect.duan_delta()).abs() < 1e-12);
}

#[test]
fn pure_loss_distilled_link_stays_entangled() {
    for r in [0.1, 0.5, 1.5] {
        for i in 1..=40 {
            let mut cfg = RepeaterConfig::new(r, 0, 25.0 * i as f64, Variant::I).unwrap();
            cfg.n_th = 0.0;
            assert!(chain_delta(&cfg).unwrap() < 1.0, "r={r} L={}", cfg.distance);
        }
    }
    let mut cfg = RepeaterConfig::new(0.5, 0, 10.0, Variant::II).unwrap();
    cfg.n_th = 0.0;
    assert_eq!(max_distance(&cfg).unwrap().status, DistanceStatus::Unbounded);
}

#[test]
fn pure_loss_chains_hit_precision_or_bound() {
    let mut cfg = RepeaterConfig::new(0.1, 1, 10.0, Variant::I).unwrap();
    cfg.n_th = 0.0;
    let md = max_distance(&cfg).unwrap();
    assert!(md.km > 0.0 && md.delta < 1.0);
    assert_ne!(md.status, DistanceStatus::NeverEntangled);
}

#[test]
fn bypass_depth_zero_reproduces_direct_lmax() {
    for r in [0.25, 0.5, 1.0, 2.0] {
        let mut cfg = RepeaterConfig::new(r, 0, 1.0, Variant::I).unwrap();
        cfg.distillation = Distillation::Bypass;
        let md = max_distance(&cfg).unwrap();
        let direct = direct_lmax(r, L_ATT, N_TH).unwrap().unwrap();
        assert!(md.km <= direct && direct - md.km <= DISTANCE_TOL_KM, "{} vs {direct}", md.km);
        assert!(md.delta < 1.0);
    }
}

#[test]
fn distillation_never_hurts_a_single_link() {
    for i in 0..20 {
        let r = 0.1 + 0.1 * i as f64;
        let md = max_distance(&RepeaterConfig::new(r, 0, 1.0, Variant::I).unwrap()).unwrap();
        assert!(md.km >= direct_lmax(r, L_ATT, N_TH).unwrap().unwrap() - DISTANCE_TOL_KM);
    }
}

#[test]
fn one_swap_beats_direct_at_mid_squeezing() {
    let r = 0.3;
    let md = max_distance(&RepeaterConfig::new(r, 1, 1.0, Variant::I).unwrap()).unwrap();
    assert!(md.km > direct_lmax(r, L_ATT, N_TH).unwrap().unwrap());
    // At equal L beyond the single-link reach, the k=1 chain is still entangled.
    let l0 = max_distance(&RepeaterConfig::new(r, 0, 1.0, Variant::I).unwrap()).unwrap().km;
    let beyond = RepeaterConfig::new(r, 1, l0 + 50.0, Variant::I).unwrap();
    assert!(chain_delta(&beyond).unwrap() < 1.0);
}

#[test]
fn nested_variant_distils_after_each_swap() {
    let base = RepeaterConfig::new(0.25, 1, 600.0, Variant::I).unwrap();
    let nested = RepeaterConfig {
        distillation: Distillation::Nested,
        ..base
    };
    let distil = |s: &SymmetricTwoMode| {
        let e = epsilon_symmetric(s).unwrap();
        distilled_state(e, lambda_policy(e, 0.99).unwrap()).unwrap()
    };
    let link = transmit(0.25, 300.0, L_ATT, N_TH).unwrap();
    let expect = distil(&swap(&distil(&link)).unwrap());
    let got = chain_state(&nested).unwrap();
    assert!((got.c() - expect.c()).abs() < 1e-12 * expect.c());
    assert!((got.s() - expect.s()).abs() < 1e-12 * expect.c());
}

#[test]
fn scan_rows_and_optimal_squeezing() {
    let grid: Vec<f64> = (0..=38).map(|i| 0.1 + 0.05 * i as f64).collect();
    let rows = scan(&grid, &[0, 1, 2, 3], Variant::I, &ScanSettings::default()).unwrap();
    assert_eq!(rows.len(), grid.len() * 5);
    for row in rows.iter().filter(|r| r.kind == ScanKind::Direct) {
        assert_eq!(row.l_max_km, direct_lmax(row.r, L_ATT, N_TH).unwrap().unwrap());
    }
    let argmax = |m: u64| {
        rows.iter()
            .filter(|r| r.m == m && r.kind != ScanKind::Direct)
            .max_by(|a, b| a.l_max_km.partial_cmp(&b.l_max_km).unwrap())
            .unwrap()
    };
    let best: Vec<_> = [1u64, 2, 4, 8].iter().map(|&m| argmax(m)).collect();
    assert!(best.windows(2).all(|w| w[1].l_max_km >= w[0].l_max_km));
    let direct_best = rows
        .iter()
        .filter(|r| r.kind == ScanKind::Direct)
        .max_by(|a, b| a.l_max_km.partial_cmp(&b.l_max_km).unwrap())
        .unwrap();
    assert!(best[3].r < direct_best.r);
}

#[test]
fn variant_ii_never_exceeds_variant_i() {
    for k in 0..4 {
        for i in 0..10 {
            let r = 0.1 + 0.2 * i as f64;
            let a = max_distance(&RepeaterConfig::new(r, k, 1.0, Variant::I).unwrap()).unwrap();
            let b = max_distance(&RepeaterConfig::new(r, k, 1.0, Variant::II).unwrap()).unwrap();
            assert!(b.km <= a.km);
        }
    }
}

#[test]
fn config_validation_names_parameter() {
    let err = RepeaterConfig::new(-1.0, 0, 10.0, Variant::I).unwrap_err();
    assert!(err.to_string().contains('r'));
    let mut cfg = RepeaterConfig::new(0.5, 0, 10.0, Variant::I).unwrap();
    cfg.lambda_factor = 1.0;
    assert!(cfg.validate().is_err());
}

proptest! {
    #[test]
    fn swap_preserves_physicality(c in 1.0f64..50.0, frac in 0.0f64..1.0) {
        let s = (c * c - 1.0).sqrt() * frac;
        let out = swap(&SymmetricTwoMode::new(c, s).unwrap()).unwrap();
        prop_assert!((out.c() - 1.0) * (out.c() + 1.0) - out.s() * out.s() >= -1e-9 * out.c() * out.c());
    }

    #[test]
    fn boundary_consistency(r in 0.05f64..4.0) {
        let l = direct_lmax(r, L_ATT, N_TH).unwrap().unwrap();
        let d = transmit(r, l, L_ATT, N_TH).unwrap().duan_delta();
        prop_assert!((d - 1.0).abs() < 1e-9);
    }
}
