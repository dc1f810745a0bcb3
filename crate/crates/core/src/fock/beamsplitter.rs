//! Beam-splitter amplitudes, the building block and photon replacement.

use nalgebra::{DMatrix, DVector};

use super::{conjugate_mode, digits_of, enforce_leakage, filter_matrix, FockDensityMatrix, C64, MIN_WEIGHT};
use crate::error::{Error, Result};
use crate::gaussian::GaussianFilter;
use crate::linalg;

/// Residual mass (relative to the trace) left out of the low-rank factor of a
/// mixed input.
const FACTOR_REL_TOL: f64 = 1e-16;
/// Output columns (detector outcomes) carrying less mass than this are skipped.
const COLUMN_MASS_TOL: f64 = 1e-30;
const BATCH: usize = 256;

/// Amplitudes ⟨a, x+y−a| U |x, y⟩ of a two-mode beam splitter, for every
/// input pair (x, y) below the input cutoff.
///
/// Convention: U† a U = √T a + √R b and U† b U = √T b − √R a, so that
/// U a† U† = √T a† − √R b† and U b† U† = √R a† + √T b†.
#[derive(Debug, Clone)]
pub struct BsTable {
    d_in: usize,
    amps: Vec<Vec<f64>>,
}

/// Nonzero amplitudes for one input pair: (a, b, amplitude).
pub type PairAmplitudes = Vec<(usize, usize, f64)>;

impl BsTable {
    pub fn new(d_in: usize, reflectivity: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&reflectivity) {
            return Err(Error::param("R", reflectivity, "reflectivity must lie in [0, 1]"));
        }
        let t = (1.0 - reflectivity).sqrt();
        let rho = reflectivity.sqrt();
        // w(x, y)[a] = ⟨a, x+y−a| U |x, y⟩, built by applying the transformed
        // creation operators one photon at a time; each step preserves the norm.
        let raise = |w: &[f64], alpha: f64, beta: f64, k: f64| -> Vec<f64> {
            let n = w.len() - 1;
            let mut out = vec![0.0; n + 2];
            for (a, &v) in w.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                out[a + 1] += alpha * ((a + 1) as f64).sqrt() * v;
                out[a] += beta * ((n - a + 1) as f64).sqrt() * v;
            }
            for o in out.iter_mut() {
                *o /= k.sqrt();
            }
            out
        };
        let mut amps = vec![Vec::new(); d_in * d_in];
        let mut column = vec![1.0];
        for y in 0..d_in {
            if y > 0 {
                column = raise(&column, rho, t, y as f64);
            }
            let mut w = column.clone();
            amps[y] = w.clone();
            for x in 1..d_in {
                w = raise(&w, t, -rho, x as f64);
                amps[x * d_in + y] = w.clone();
            }
        }
        Ok(Self { d_in, amps })
    }

    pub fn input_cutoff(&self) -> usize {
        self.d_in
    }

    /// ⟨a, b| U |x, y⟩ (zero unless a + b = x + y).
    pub fn amplitude(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        if a + b != x + y || x >= self.d_in || y >= self.d_in {
            return 0.0;
        }
        self.amps[x * self.d_in + y][a]
    }

    /// Output amplitudes for input (x, y) restricted to a < a_max, b < b_max.
    pub fn outputs(&self, x: usize, y: usize, a_max: usize, b_max: usize) -> PairAmplitudes {
        let n = x + y;
        self.amps[x * self.d_in + y]
            .iter()
            .enumerate()
            .filter(|&(a, &v)| a < a_max && n - a < b_max && v != 0.0)
            .map(|(a, &v)| (a, n - a, v))
            .collect()
    }
}

/// Truncated two-mode beam-splitter matrix on the d² space (rows a·d + b).
pub fn truncated_beam_splitter(reflectivity: f64, d: usize) -> Result<DMatrix<C64>> {
    let table = BsTable::new(d, reflectivity)?;
    let mut u = DMatrix::zeros(d * d, d * d);
    for x in 0..d {
        for y in 0..d {
            for (a, b, v) in table.outputs(x, y, d, d) {
                u[(a * d + b, x * d + y)] = C64::new(v, 0.0);
            }
        }
    }
    Ok(u)
}

/// Deviation of the truncated beam splitter from commuting with P ⊗ P,
/// P = exp(−β n/2), together with its truncation bound.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ConjugationResidual {
    pub cutoff: usize,
    /// ‖U (P⊗P) U† − P⊗P‖_F on the truncated space.
    pub frobenius: f64,
    /// sqrt(Σ_{N ≥ d} (2d − 1 − N) e^{−βN}): the weight of P⊗P on the total
    /// photon sectors that the cutoff cuts through.
    pub leakage_bound: f64,
}

/// U conserves total photon number, so only sectors N ≥ d, where the
/// truncated U is a contraction rather than unitary, contribute; each adds at
/// most e^{−βN/2}·sqrt(dim of the sector) to the Frobenius norm.
pub fn conjugation_residual(beta: f64, reflectivity: f64, d: usize) -> Result<ConjugationResidual> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::param("beta", beta, "filter strength must be positive"));
    }
    let u = truncated_beam_splitter(reflectivity, d)?;
    let pp = DMatrix::from_fn(d * d, d * d, |i, j| {
        if i == j {
            C64::new((-0.5 * beta * (i / d + i % d) as f64).exp(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let frobenius = (&u * &pp * u.adjoint() - &pp).norm();
    let leakage_bound = (d..2 * d - 1)
        .map(|n| (2 * d - 1 - n) as f64 * (-beta * n as f64).exp())
        .sum::<f64>()
        .sqrt();
    Ok(ConjugationResidual {
        cutoff: d,
        frobenius,
        leakage_bound,
    })
}

/// Applies a pairwise beam splitter to axes (ax, bx) of a dense row-major tensor.
fn apply_pair(
    t: &[C64],
    dims: &[usize],
    ax: usize,
    bx: usize,
    table: &BsTable,
    a_out: usize,
    b_out: usize,
) -> (Vec<C64>, Vec<usize>) {
    let mut new_dims = dims.to_vec();
    new_dims[ax] = a_out;
    new_dims[bx] = b_out;
    let strides = |ds: &[usize]| {
        let mut s = vec![1usize; ds.len()];
        for k in (0..ds.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * ds[k + 1];
        }
        s
    };
    let si = strides(dims);
    let so = strides(&new_dims);
    let others: Vec<usize> = (0..dims.len()).filter(|&k| k != ax && k != bx).collect();
    let mut out = vec![C64::new(0.0, 0.0); new_dims.iter().product()];
    let outputs: Vec<PairAmplitudes> = (0..dims[ax] * dims[bx])
        .map(|i| table.outputs(i / dims[bx], i % dims[bx], a_out, b_out))
        .collect();
    let mut digits = vec![0usize; others.len()];
    loop {
        let base_in: usize = others.iter().zip(&digits).map(|(&k, &v)| v * si[k]).sum();
        let base_out: usize = others.iter().zip(&digits).map(|(&k, &v)| v * so[k]).sum();
        for x in 0..dims[ax] {
            for y in 0..dims[bx] {
                let val = t[base_in + x * si[ax] + y * si[bx]];
                if val == C64::new(0.0, 0.0) {
                    continue;
                }
                for &(a, b, amp) in &outputs[x * dims[bx] + y] {
                    out[base_out + a * so[ax] + b * so[bx]] += val * amp;
                }
            }
        }
        // Odometer over the untouched axes.
        let mut k = others.len();
        loop {
            if k == 0 {
                return (out, new_dims);
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < dims[others[k]] {
                break;
            }
            digits[k] = 0;
        }
    }
}

/// One building block: mix ρ_A and ρ_B pairwise on beam splitters of
/// reflectivity R, measure the B outputs with the filter Π and keep the A
/// outputs. Returns the normalised output and the relative mass
/// tr[U(ρ_A⊗ρ_B)U†(1⊗Π)] with Π normalised so that its vacuum eigenvalue is 1.
pub fn building_block(
    rho_a: &FockDensityMatrix,
    rho_b: &FockDensityMatrix,
    reflectivity: f64,
    filter: &GaussianFilter,
) -> Result<(FockDensityMatrix, f64)> {
    let m = rho_a.modes();
    let d = rho_a.cutoff();
    if rho_b.modes() != m || rho_b.cutoff() != d {
        return Err(Error::DimensionMismatch {
            expected: rho_a.dim(),
            found: rho_b.dim(),
        });
    }
    if filter.modes() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: filter.modes(),
        });
    }
    enforce_leakage(rho_a.leakage().max(rho_b.leakage()))?;
    let table = BsTable::new(d, reflectivity)?;

    // V ⊗ V commutes with the beam splitter, so work in the V-rotated frame.
    let frame: Option<Vec<DMatrix<C64>>> = if filter.mode_unitary().is_identity() {
        None
    } else {
        let mut vs = Vec::with_capacity(m);
        for j in 0..m {
            let block = filter.mode_unitary().local_block(j).expect("local filter");
            vs.push(super::gaussian_unitary(&block, d)?);
        }
        Some(vs)
    };
    let to_frame = |rho: &DMatrix<C64>| -> DMatrix<C64> {
        match &frame {
            None => rho.clone(),
            Some(vs) => {
                let dims = vec![d; m];
                let mut out = rho.clone();
                for (j, v) in vs.iter().enumerate() {
                    out = conjugate_mode(&out, &dims, j, &v.adjoint());
                }
                out
            }
        }
    };
    let comps_a = linalg::pivoted_cholesky(&to_frame(rho_a.data()), FACTOR_REL_TOL);
    let comps_b = linalg::pivoted_cholesky(&to_frame(rho_b.data()), FACTOR_REL_TOL);

    let b_dim1 = 2 * d - 1;
    let a_dim: usize = d.pow(m as u32);
    let b_dim: usize = b_dim1.pow(m as u32);
    let mut pi = vec![1.0f64; b_dim];
    let mut digits = vec![0usize; m];
    for (idx, w) in pi.iter_mut().enumerate() {
        digits_of(idx, b_dim1, &mut digits);
        *w = digits
            .iter()
            .zip(filter.betas())
            .map(|(&b, &beta)| (-beta * b as f64).exp())
            .product();
    }

    let mut acc: DMatrix<C64> = DMatrix::zeros(a_dim, a_dim);
    let mut weight = 0.0;
    let mut batch: Vec<DVector<C64>> = Vec::with_capacity(BATCH);
    let flush = |batch: &mut Vec<DVector<C64>>, acc: &mut DMatrix<C64>| {
        if batch.is_empty() {
            return;
        }
        let k = DMatrix::from_columns(batch);
        acc.gemm(C64::new(1.0, 0.0), &k, &k.adjoint(), C64::new(1.0, 0.0));
        batch.clear();
    };

    for psi in &comps_a {
        for phi in &comps_b {
            let w = 1.0;
            let mut t: Vec<C64> = Vec::with_capacity(psi.len() * phi.len());
            for &u in psi.iter() {
                for &v in phi.iter() {
                    t.push(u * v);
                }
            }
            let mut dims = vec![d; 2 * m];
            for j in 0..m {
                let (nt, nd) = apply_pair(&t, &dims, j, m + j, &table, d, b_dim1);
                t = nt;
                dims = nd;
            }
            // Row-major: A multi-index major, B multi-index minor.
            for (bi, &pib) in pi.iter().enumerate() {
                let scale = w * pib;
                let mut norm2 = 0.0;
                for ai in 0..a_dim {
                    norm2 += t[ai * b_dim + bi].norm_sqr();
                }
                let mass = scale * norm2;
                if mass < COLUMN_MASS_TOL {
                    continue;
                }
                weight += mass;
                let s = scale.sqrt();
                batch.push(DVector::from_fn(a_dim, |ai, _| t[ai * b_dim + bi] * s));
                if batch.len() == BATCH {
                    flush(&mut batch, &mut acc);
                }
            }
        }
    }
    flush(&mut batch, &mut acc);

    if weight < MIN_WEIGHT {
        return Err(Error::DegeneratePostSelection { weight });
    }
    if let Some(vs) = &frame {
        let dims = vec![d; m];
        for (j, v) in vs.iter().enumerate() {
            acc = conjugate_mode(&acc, &dims, j, v);
        }
    }
    let out = FockDensityMatrix::from_parts(m, d, acc, false)?.normalize()?;
    enforce_leakage(out.leakage())?;
    Ok((out, weight))
}

/// Diagonal Kraus amplitudes k_n = ⟨n, 1| U |n, 1⟩ of photon replacement on one
/// mode: signal transmitted with T = η², single-photon ancilla, one photon
/// detected at the reflected port.
pub fn photon_replacement_kraus(eta: f64, d: usize) -> Result<Vec<f64>> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::param("eta", eta, "transmittivity amplitude must lie in (0, 1)"));
    }
    let table = BsTable::new(d + 1, 1.0 - eta * eta)?;
    Ok((0..d).map(|n| table.amplitude(n, 1, n, 1)).collect())
}

/// Symmetric photon replacement applied to every mode. Returns the
/// normalised output and the relative post-selection mass.
pub fn photon_replacement(
    rho: &FockDensityMatrix,
    eta: f64,
) -> Result<(FockDensityMatrix, f64)> {
    let d = rho.cutoff();
    let m = rho.modes();
    let k = photon_replacement_kraus(eta, d)?;
    let dim = rho.dim();
    let mut digits = vec![0usize; m];
    let kd: Vec<f64> = (0..dim)
        .map(|i| {
            digits_of(i, d, &mut digits);
            digits.iter().map(|&n| k[n]).product()
        })
        .collect();
    let data = DMatrix::from_fn(dim, dim, |i, j| rho.data()[(i, j)] * (kd[i] * kd[j]));
    let out = FockDensityMatrix::from_parts(m, d, data, false)?;
    let weight = out.trace();
    if weight < MIN_WEIGHT {
        return Err(Error::DegeneratePostSelection { weight });
    }
    Ok((out.normalize()?, weight))
}

/// P ρ P renormalised, with P = Π^{1/2} of the filter.
pub fn filtered_object_impl(
    rho: &FockDensityMatrix,
    filter: &GaussianFilter,
    power: f64,
) -> Result<FockDensityMatrix> {
    if filter.modes() != rho.modes() {
        return Err(Error::DimensionMismatch {
            expected: rho.modes(),
            found: filter.modes(),
        });
    }
    let d = rho.cutoff();
    let mats = (0..rho.modes())
        .map(|j| filter_matrix(filter, j, d, power))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&DMatrix<C64>> = mats.iter().collect();
    rho.conjugate_local(&refs)?.normalize()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugation_residual_within_bound() {
        for &r in &[0.25, 0.5, 0.75] {
            let res = conjugation_residual(1.0, r, 10).unwrap();
            assert!(res.frobenius > 0.0 && res.frobenius <= res.leakage_bound, "{res:?}");
        }
    }

    #[test]
    fn table_is_unitary_within_subspaces() {
        let d = 12;
        let tab = BsTable::new(d, 0.3).unwrap();
        for n in 0..d {
            for x1 in 0..=n {
                for x2 in 0..=n {
                    let dotp: f64 = (0..=n)
                        .map(|a| tab.amplitude(a, n - a, x1, n - x1) * tab.amplitude(a, n - a, x2, n - x2))
                        .sum();
                    let expect = if x1 == x2 { 1.0 } else { 0.0 };
                    assert!((dotp - expect).abs() < 1e-12, "n={n} x1={x1} x2={x2}: {dotp}");
                }
            }
        }
    }

    #[test]
    fn single_photon_amplitudes() {
        let r: f64 = 0.3;
        let tab = BsTable::new(3, r).unwrap();
        // U|1,0⟩ = √T |1,0⟩ − √R |0,1⟩; U|0,1⟩ = √R |1,0⟩ + √T |0,1⟩.
        assert!((tab.amplitude(1, 0, 1, 0) - (1.0 - r).sqrt()).abs() < 1e-15);
        assert!((tab.amplitude(0, 1, 1, 0) + r.sqrt()).abs() < 1e-15);
        assert!((tab.amplitude(1, 0, 0, 1) - r.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn photon_replacement_kraus_closed_form() {
        let eta: f64 = 0.8;
        let k = photon_replacement_kraus(eta, 10).unwrap();
        let e2 = eta * eta;
        for (n, &kn) in k.iter().enumerate() {
            let expect = eta.powi(n as i32 - 1) * (e2 - n as f64 * (1.0 - e2));
            assert!((kn - expect).abs() < 1e-12, "n={n}");
        }
    }
}
