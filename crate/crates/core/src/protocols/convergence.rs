//! Convergence diagnostics for central-limit sequences.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::CharFunHandle;
use crate::channels::limit_state_cov;
use crate::error::{Error, Result};
use crate::fock::{
    building_block, covariance_from_fock, fidelity, filtered_object, gaussian_unitary, moment,
    FockDensityMatrix, MomentSpec,
};
use crate::gaussian::{GaussianFilter, GaussianState};
use crate::linalg;

/// Deterministic evaluation points inside the ball |r| ≤ r₀: for every
/// coordinate plane, `directions` equally spaced unit directions times the
/// radii step, 2·step, …, r₀, plus the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalGrid {
    points: Vec<Vec<f64>>,
    r0: f64,
}

impl EvalGrid {
    pub const DIRECTIONS: usize = 16;
    pub const RADIAL_STEP: f64 = 0.25;
    pub const DEFAULT_R0: f64 = 3.0;

    pub fn new(modes: usize, r0: f64, radial_step: f64, directions: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::param("modes", 0.0, "need at least one mode"));
        }
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(Error::param("r0", r0, "radius must be positive"));
        }
        if !(radial_step > 0.0) {
            return Err(Error::param("grid_step", radial_step, "radial step must be positive"));
        }
        if directions == 0 {
            return Err(Error::param("directions", 0.0, "need at least one direction"));
        }
        let dim = 2 * modes;
        let n_radii = ((r0 / radial_step) + 1e-9).floor() as usize;
        let mut points = vec![vec![0.0; dim]];
        for i in 0..dim {
            for l in i + 1..dim {
                for k in 0..directions {
                    let angle = 2.0 * std::f64::consts::PI * k as f64 / directions as f64;
                    let (s, c) = angle.sin_cos();
                    for step in 1..=n_radii {
                        let rad = step as f64 * radial_step;
                        let mut p = vec![0.0; dim];
                        p[i] = rad * c;
                        p[l] = rad * s;
                        points.push(p);
                    }
                }
            }
        }
        Ok(Self { points, r0 })
    }

    pub fn standard(modes: usize, r0: f64) -> Result<Self> {
        Self::new(modes, r0, Self::RADIAL_STEP, Self::DIRECTIONS)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn radius(&self) -> f64 {
        self.r0
    }
}

/// max |χ_A − χ_B| over a grid of the ball |r| ≤ r₀ with `grid_density`
/// radial samples per unit length.
pub fn sup_deviation(
    a: &CharFunHandle,
    b: &CharFunHandle,
    r0: f64,
    grid_density: f64,
) -> Result<f64> {
    if !(grid_density > 0.0) {
        return Err(Error::param("grid_density", grid_density, "must be positive"));
    }
    let grid = EvalGrid::new(a.modes(), r0, 1.0 / grid_density, EvalGrid::DIRECTIONS)?;
    sup_deviation_on(a, b, &grid)
}

pub fn sup_deviation_on(a: &CharFunHandle, b: &CharFunHandle, grid: &EvalGrid) -> Result<f64> {
    if a.modes() != b.modes() {
        return Err(Error::DimensionMismatch {
            expected: a.modes(),
            found: b.modes(),
        });
    }
    let mut worst = 0.0f64;
    for p in grid.points() {
        worst = worst.max((a.eval(p)? - b.eval(p)?).norm());
    }
    Ok(worst)
}

fn double_factorial(k: usize) -> f64 {
    (1..=k).rev().step_by(2).map(|x| x as f64).product()
}

/// Gaussian moment tr(H^k τ) = (k−1)!! ν^{k/2} for even k, 0 for odd k.
pub fn wick_moment(nu: f64, k: usize) -> f64 {
    if k % 2 == 1 {
        0.0
    } else if k == 0 {
        1.0
    } else {
        double_factorial(k - 1) * nu.powi((k / 2) as i32)
    }
}

/// tr(H^k τ_N) for the central-limit sequence χ_N(r) = χ_1(r/√N)^N, given the
/// moments μ_j = tr(H^j τ_1), j = 0..=k.
///
/// Along H, χ_1(tr) = Σ_j μ_j (it)^j / j!, so the k-th moment of τ_N is
/// k! i^{−k} [t^k] (Σ_j μ_j (it/√N)^j / j!)^N, computed exactly with
/// truncated power series.
pub fn central_limit_moment(base_moments: &[f64], n: u64, k: usize) -> Result<f64> {
    if base_moments.len() <= k {
        return Err(Error::DimensionMismatch {
            expected: k + 1,
            found: base_moments.len(),
        });
    }
    if n == 0 {
        return Err(Error::param("N", 0.0, "need at least one copy"));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mut fact = 1.0;
    let mut ipow = Complex64::new(1.0, 0.0);
    let mut base = vec![Complex64::new(0.0, 0.0); k + 1];
    for (j, b) in base.iter_mut().enumerate() {
        if j > 0 {
            fact *= j as f64;
            ipow *= Complex64::new(0.0, 1.0);
        }
        *b = ipow * (base_moments[j] * scale.powi(j as i32) / fact);
    }
    let mul = |x: &[Complex64], y: &[Complex64]| -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); k + 1];
        for (i, &xi) in x.iter().enumerate() {
            for (j, &yj) in y.iter().enumerate().take(k + 1 - i) {
                out[i + j] += xi * yj;
            }
        }
        out
    };
    let mut acc = vec![Complex64::new(0.0, 0.0); k + 1];
    acc[0] = Complex64::new(1.0, 0.0);
    let mut b = base;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul(&acc, &b);
        }
        b = mul(&b, &b);
        e >>= 1;
    }
    let kfact: f64 = (1..=k).map(|x| x as f64).product();
    let ik = Complex64::new(0.0, 1.0).powu(k as u32);
    Ok((acc[k] / ik * kfact).re)
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentSeries {
    pub direction: usize,
    pub k: usize,
    pub moments: Vec<f64>,
    pub wick_target: f64,
    pub deviations: Vec<f64>,
    /// Smallest listed N from which the deviations never increase.
    pub monotone_from_n: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub ns: Vec<usize>,
    pub directions: Vec<Vec<f64>>,
    pub series: Vec<MomentSeries>,
}

impl MomentReport {
    pub fn find(&self, direction: usize, k: usize) -> Option<&MomentSeries> {
        self.series
            .iter()
            .find(|s| s.direction == direction && s.k == k)
    }
}

/// Unit quadrature axes plus the normalised sums of every pair of axes.
fn report_directions(modes: usize) -> Vec<Vec<f64>> {
    let dim = 2 * modes;
    let mut out = Vec::new();
    for i in 0..dim {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        out.push(v);
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..dim {
        for l in i + 1..dim {
            let mut v = vec![0.0; dim];
            v[i] = h;
            v[l] = h;
            out.push(v);
        }
    }
    out
}

/// Moments of τ_N along several directions versus their Wick (Gaussian-limit)
/// values, for k = 1..=k_max and each listed N.
pub fn moment_convergence_report(
    tau1: &FockDensityMatrix,
    k_max: usize,
    ns: &[usize],
) -> Result<MomentReport> {
    if k_max == 0 || ns.is_empty() || ns.contains(&0) {
        return Err(Error::param("k_max", k_max as f64, "need k_max >= 1 and N >= 1"));
    }
    let tau1 = tau1.normalize()?;
    let directions = report_directions(tau1.modes());
    let mut series = Vec::new();
    for (di, dir) in directions.iter().enumerate() {
        let mut mu = vec![1.0];
        for j in 1..=k_max {
            mu.push(moment(&tau1, &MomentSpec::power(dir, j)?)?.re);
        }
        for k in 1..=k_max {
            let target = wick_moment(mu[2], k);
            let moments = ns
                .iter()
                .map(|&n| central_limit_moment(&mu, n as u64, k))
                .collect::<Result<Vec<_>>>()?;
            let deviations: Vec<f64> = moments.iter().map(|m| (m - target).abs()).collect();
            let mut start = deviations.len() - 1;
            while start > 0 && deviations[start] <= deviations[start - 1] * (1.0 + 1e-12) + 1e-15 {
                start -= 1;
            }
            series.push(MomentSeries {
                direction: di,
                k,
                moments,
                wick_target: target,
                deviations,
                monotone_from_n: ns[start],
            });
        }
    }
    Ok(MomentReport {
        ns: ns.to_vec(),
        directions,
        series,
    })
}

/// Physical Fock states of the pumping Gaussifier: ρ_1, ρ_2, …, ρ_{n_max},
/// with ρ_{N+1} the output of a building block on (ρ_N, ρ_1) at R = 1/(N+1).
pub fn fock_pumping_sequence(
    rho1: &FockDensityMatrix,
    filter: &GaussianFilter,
    n_max: usize,
) -> Result<Vec<FockDensityMatrix>> {
    let rho1 = rho1.normalize()?;
    let mut out = vec![rho1.clone()];
    for n in 1..n_max {
        let (next, _) = building_block(&out[n - 1], &rho1, 1.0 / (n as f64 + 1.0), filter)?;
        out.push(next);
    }
    Ok(out)
}

/// Recursive Gaussifier of the given depth on Fock states (R = 1/2 throughout).
pub fn fock_recursive(
    rho1: &FockDensityMatrix,
    filter: &GaussianFilter,
    depth: u32,
) -> Result<FockDensityMatrix> {
    let mut rho = rho1.normalize()?;
    for _ in 0..depth {
        rho = building_block(&rho, &rho, 0.5, filter)?.0;
    }
    Ok(rho)
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixElementSeries {
    pub row: Vec<usize>,
    pub col: Vec<usize>,
    /// ⟨row|τ_N|col⟩ as (re, im) per N.
    pub tau: Vec<(f64, f64)>,
    /// ⟨row|ρ_N|col⟩ / tr(Pρ_N P) per N.
    pub rho_normalized: Vec<(f64, f64)>,
    pub tau_limit: Option<(f64, f64)>,
    pub rho_limit: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixElementReport {
    pub ns: Vec<usize>,
    pub series: Vec<MatrixElementSeries>,
    /// Physicality margin of the candidate limit covariance (min eig of Γ + iΩ).
    pub limit_margin: f64,
    pub limit_physical: bool,
    /// F(ρ_N, ρ_∞) when the limit state is physical and representable.
    pub fidelity_to_limit: Option<Vec<f64>>,
}

fn to_filter_frame(rho: &FockDensityMatrix, filter: &GaussianFilter) -> Result<FockDensityMatrix> {
    if filter.mode_unitary().is_identity() {
        return Ok(rho.clone());
    }
    let d = rho.cutoff();
    let vs = (0..rho.modes())
        .map(|j| {
            let block = filter.mode_unitary().local_block(j).expect("local filter");
            gaussian_unitary(&block, d).map(|v| v.adjoint())
        })
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&DMatrix<Complex64>> = vs.iter().collect();
    rho.conjugate_local(&refs)
}

/// tr(Π ρ) with Π = V exp(−Σβ n) V† (vacuum eigenvalue 1), for ρ in the V-frame.
fn filter_mass(rho_frame: &FockDensityMatrix, filter: &GaussianFilter) -> f64 {
    let d = rho_frame.cutoff();
    let m = rho_frame.modes();
    let mut digits = vec![0usize; m];
    (0..rho_frame.dim())
        .map(|i| {
            crate::fock::digits_of(i, d, &mut digits);
            let w: f64 = digits
                .iter()
                .zip(filter.betas())
                .map(|(&n, &b)| (-b * n as f64).exp())
                .product();
            w * rho_frame.data()[(i, i)].re
        })
        .sum()
}

fn pair(z: Complex64) -> (f64, f64) {
    (z.re, z.im)
}

/// Matrix elements of τ_N and of the P-normalised ρ_N in the filter's
/// eigenbasis, along the Fock pumping sequence, with their Gaussian limits.
pub fn matrix_element_convergence(
    rho1: &FockDensityMatrix,
    filter: &GaussianFilter,
    pairs: &[(Vec<usize>, Vec<usize>)],
    ns: &[usize],
) -> Result<MatrixElementReport> {
    let n_max = ns.iter().cloned().max().unwrap_or(0);
    if n_max == 0 || ns.contains(&0) {
        return Err(Error::param("N", 0.0, "need a non-empty list of N >= 1"));
    }
    let m = rho1.modes();
    for (r, c) in pairs {
        if r.len() != m || c.len() != m || r.iter().chain(c).any(|&n| n >= rho1.cutoff()) {
            return Err(Error::param("pairs", r.len() as f64, "basis index outside the truncated space"));
        }
    }
    let seq = fock_pumping_sequence(rho1, filter, n_max)?;
    let tau1 = filtered_object(&seq[0], filter)?;
    let (_, gamma_tau) = covariance_from_fock(&tau1)?;
    let limit = limit_state_cov(&gamma_tau, filter)?;

    let tau_inf = GaussianState::centered(gamma_tau.clone())
        .and_then(|g| FockDensityMatrix::from_gaussian(&g, rho1.cutoff()))
        .and_then(|t| to_filter_frame(&t, filter))
        .map_err(|e| log::warn!("Gaussian limit of tau not representable: {e}"))
        .ok();
    let rho_inf = if limit.physical {
        GaussianState::centered(limit.covariance.clone())
            .and_then(|g| FockDensityMatrix::from_gaussian(&g, rho1.cutoff()))
            .map_err(|e| log::warn!("limit state not representable: {e}"))
            .ok()
    } else {
        None
    };
    let rho_inf_frame = match &rho_inf {
        Some(r) => Some(to_filter_frame(r, filter)?),
        None => None,
    };

    let mut taus = Vec::new();
    let mut rhos = Vec::new();
    let mut fids = Vec::new();
    for &n in ns {
        let rho_n = &seq[n - 1];
        let frame = to_filter_frame(rho_n, filter)?;
        taus.push(to_filter_frame(&filtered_object(rho_n, filter)?, filter)?);
        rhos.push((frame.clone(), filter_mass(&frame, filter)));
        if let Some(r) = &rho_inf {
            fids.push(fidelity(rho_n, r)?);
        }
    }
    let series = pairs
        .iter()
        .map(|(row, col)| MatrixElementSeries {
            row: row.clone(),
            col: col.clone(),
            tau: taus.iter().map(|t| pair(t.element(row, col))).collect(),
            rho_normalized: rhos
                .iter()
                .map(|(r, mass)| pair(r.element(row, col) / *mass))
                .collect(),
            tau_limit: tau_inf.as_ref().map(|t| pair(t.element(row, col))),
            rho_limit: rho_inf_frame
                .as_ref()
                .map(|r| pair(r.element(row, col) / filter_mass(r, filter))),
        })
        .collect();
    Ok(MatrixElementReport {
        ns: ns.to_vec(),
        series,
        limit_margin: limit.margin,
        limit_physical: limit.physical,
        fidelity_to_limit: rho_inf.map(|_| fids),
    })
}

/// Whether tr(Π⁻¹ τ_ref) is finite for a Gaussian reference state: the
/// Gaussian integral converges iff Γ_Π − Γ_ref is positive definite.
#[derive(Debug, Clone, Serialize)]
pub struct FinitenessReport {
    pub min_eigenvalue: f64,
    pub finite: bool,
    /// |min eigenvalue| below the borderline tolerance: numerically undecided.
    pub borderline: bool,
}

pub fn reference_finiteness_check(
    gamma_ref: &DMatrix<f64>,
    filter: &GaussianFilter,
) -> Result<FinitenessReport> {
    const BORDERLINE: f64 = 1e-8;
    let g_pi = filter.cov_pi();
    if gamma_ref.shape() != g_pi.shape() {
        return Err(Error::DimensionMismatch {
            expected: g_pi.nrows(),
            found: gamma_ref.nrows(),
        });
    }
    linalg::check_symmetric(gamma_ref, 1e-9)?;
    let diff = linalg::symmetrize(&(g_pi - gamma_ref));
    let min = diff
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    Ok(FinitenessReport {
        min_eigenvalue: min,
        finite: min > BORDERLINE,
        borderline: min.abs() <= BORDERLINE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        let g = EvalGrid::standard(1, 3.0).unwrap();
        assert_eq!(g.points().len(), 1 + 16 * 12);
        let g2 = EvalGrid::standard(2, 3.0).unwrap();
        assert_eq!(g2.points().len(), 1 + 6 * 16 * 12);
        assert!(g2
            .points()
            .iter()
            .all(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt() <= 3.0 + 1e-12));
    }

    #[test]
    fn wick_values() {
        assert_eq!(wick_moment(0.5, 2), 0.5);
        assert_eq!(wick_moment(0.5, 4), 0.75);
        assert_eq!(wick_moment(0.5, 6), 15.0 * 0.125);
        assert_eq!(wick_moment(0.5, 3), 0.0);
    }

    #[test]
    fn central_limit_moments_closed_form() {
        // μ = (1, 0, ν, 0, μ4): fourth moment of τ_N is 3ν² + (μ4 − 3ν²)/N.
        let (nu, mu4) = (0.8, 3.1);
        let mu = [1.0, 0.0, nu, 0.0, mu4];
        for n in [1u64, 2, 5, 16, 1000] {
            let m4 = central_limit_moment(&mu, n, 4).unwrap();
            let expect = 3.0 * nu * nu + (mu4 - 3.0 * nu * nu) / n as f64;
            assert!((m4 - expect).abs() < 1e-12, "N={n}: {m4} vs {expect}");
            assert!((central_limit_moment(&mu, n, 2).unwrap() - nu).abs() < 1e-14);
        }
    }

    #[test]
    fn thermal_reference_finiteness_threshold() {
        let beta: f64 = 1.0;
        let f = GaussianFilter::uniform(beta, 1).unwrap();
        let coth = 1.0 / (0.5 * beta).tanh();
        let inside = reference_finiteness_check(&(DMatrix::identity(2, 2) * (coth - 0.1)), &f).unwrap();
        let outside = reference_finiteness_check(&(DMatrix::identity(2, 2) * (coth + 0.1)), &f).unwrap();
        let edge = reference_finiteness_check(&(DMatrix::identity(2, 2) * coth), &f).unwrap();
        assert!(inside.finite && !inside.borderline);
        assert!(!outside.finite);
        assert!(edge.borderline && !edge.finite);
    }
}
