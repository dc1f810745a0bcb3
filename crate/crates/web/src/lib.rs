//! Browser bindings. Every export is a thin wrapper over a plain function
//! so the numerics are testable natively; arrays cross the boundary as
//! `Float64Array`s.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use cvdistill::fock::{filtered_object, photon_replacement, FockDensityMatrix};
use cvdistill::protocols::{central_limit, gaussian_limit, CharFunHandle};
use cvdistill::repeater::{chain_delta, max_distance, DistanceStatus, RepeaterConfig, Variant};
use cvdistill::GaussianFilter;
use wasm_bindgen::prelude::*;

/// Fock cutoff used in the browser; small enough for interactive rates.
pub const DEMO_CUTOFF: usize = 14;
/// Largest number of curve samples accepted from the page.
pub const MAX_POINTS: usize = 2000;

fn parse_variant(v: &str) -> Result<Variant, String> {
    v.parse::<Variant>().map_err(|e| e.to_string())
}

fn check_points(points: usize) -> Result<(), String> {
    if (2..=MAX_POINTS).contains(&points) {
        Ok(())
    } else {
        Err(format!("points must lie in 2..={MAX_POINTS}, got {points}"))
    }
}

fn linspace(a: f64, b: f64, points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |i| a + (b - a) * i as f64 / (points - 1) as f64)
}

/// Maximum distance (km) against squeezing for m = 2^k links; unbounded
/// or never-entangled points are reported as NaN. Output interleaves (r, L).
pub fn lmax_curve(k: u32, variant: &str, r_min: f64, r_max: f64, points: usize) -> Result<Vec<f64>, String> {
    check_points(points)?;
    if !(r_min > 0.0 && r_max > r_min) {
        return Err(format!("need 0 < r_min < r_max, got {r_min}, {r_max}"));
    }
    let variant = parse_variant(variant)?;
    let mut out = Vec::with_capacity(2 * points);
    for r in linspace(r_min, r_max, points) {
        let cfg = RepeaterConfig::new(r, k, 100.0, variant).map_err(|e| e.to_string())?;
        let d = max_distance(&cfg).map_err(|e| e.to_string())?;
        let km = match d.status {
            DistanceStatus::Bounded | DistanceStatus::PrecisionLimited => d.km,
            DistanceStatus::Unbounded | DistanceStatus::NeverEntangled => f64::NAN,
        };
        out.extend([r, km]);
    }
    Ok(out)
}

/// Duan Δ = C − S of the end-to-end state against distance. Output
/// interleaves (L, Δ); Δ < 1 means entangled.
pub fn delta_profile(r: f64, k: u32, variant: &str, l_max: f64, points: usize) -> Result<Vec<f64>, String> {
    check_points(points)?;
    if !(l_max > 0.0) {
        return Err(format!("need a positive distance range, got {l_max}"));
    }
    let variant = parse_variant(variant)?;
    let base = RepeaterConfig::new(r, k, l_max, variant).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(2 * points);
    for l in linspace(l_max / points as f64, l_max, points) {
        let delta = chain_delta(&base.with_distance(l)).unwrap_or(f64::INFINITY);
        out.extend([l, delta]);
    }
    Ok(out)
}

/// Re χ along the X_A axis for the N-copy central-limit state of a
/// photon-replaced two-mode squeezed input, next to its Gaussian limit.
/// Output interleaves (t, Re χ_N, χ_Gauss).
pub fn chi_cross_section(
    r: f64,
    reflectivity: f64,
    beta: f64,
    n: u32,
    t_max: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    check_points(points)?;
    if !(0.0..1.0).contains(&reflectivity) {
        return Err(format!("reflectivity must lie in [0, 1), got {reflectivity}"));
    }
    if n == 0 || !(t_max > 0.0) {
        return Err("need N >= 1 and a positive range".to_string());
    }
    let err = |e: cvdistill::Error| e.to_string();
    let filter = GaussianFilter::uniform(beta, 2).map_err(err)?;
    let tmsv = FockDensityMatrix::tmsv(r, DEMO_CUTOFF).map_err(err)?;
    let (rho, _) = photon_replacement(&tmsv, (1.0 - reflectivity).sqrt()).map_err(err)?;
    let chi1 = CharFunHandle::from_fock(&filtered_object(&rho, &filter).map_err(err)?).map_err(err)?;
    let limit = gaussian_limit(chi1.second_moments()).map_err(err)?;
    let chi_n = central_limit(&chi1, n as u64).map_err(err)?;
    let mut out = Vec::with_capacity(3 * points);
    for t in linspace(0.0, t_max, points) {
        let x = [t, 0.0, 0.0, 0.0];
        out.extend([t, chi_n.eval(&x).map_err(err)?.re, limit.eval(&x).map_err(err)?.re]);
    }
    Ok(out)
}

#[wasm_bindgen(js_name = lmaxCurve)]
pub fn lmax_curve_js(k: u32, variant: &str, r_min: f64, r_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    lmax_curve(k, variant, r_min, r_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = deltaProfile)]
pub fn delta_profile_js(r: f64, k: u32, variant: &str, l_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    delta_profile(r, k, variant, l_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = chiCrossSection)]
pub fn chi_cross_section_js(
    r: f64,
    reflectivity: f64,
    beta: f64,
    n: u32,
    t_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    chi_cross_section(r, reflectivity, beta, n, t_max, points).map_err(|e| JsError::new(&e))
}
