//! Repeater chains on symmetric two-mode states: transmission, optional
//! station loss, distillation in closed form, entanglement swapping and the
//! Duan verdict, plus maximum-distance search.

use serde::Serialize;

use crate::channels::LossThermal;
use crate::error::{Error, Result};
use crate::gaussian::SymmetricTwoMode;

/// States exchanged along the chain.
pub type LinkState = SymmetricTwoMode;

pub const DEFAULT_L_ATT: f64 = 22.0;
pub const DEFAULT_N_TH: f64 = 1e-8;
pub const DEFAULT_LAMBDA_FACTOR: f64 = 0.99;
/// Transmittance of the extra in-station loss of variant ii.
pub const STATION_TRANSMITTANCE: f64 = 0.5;
/// Below this S the ε invariant is treated as singular.
pub const SINGULAR_S: f64 = 1e-12;
pub const BRACKET_LOW_KM: f64 = 1.0;
pub const BRACKET_HIGH_KM: f64 = 5000.0;
/// Bracket extensions stop here; beyond it the distance is reported unbounded.
pub const BRACKET_CAP_KM: f64 = 1.0e6;
pub const DISTANCE_TOL_KM: f64 = 0.1;

/// Noise model: (i) fibre only, (ii) fibre plus 50% loss inside each station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Variant {
    #[serde(rename = "i")]
    I,
    #[serde(rename = "ii")]
    II,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::I => "i",
            Variant::II => "ii",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" | "1" => Ok(Variant::I),
            "ii" | "2" => Ok(Variant::II),
            _ => Err(Error::Unsupported(format!("unknown variant '{s}' (expected i or ii)"))),
        }
    }
}

/// Where distillation happens along the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Distillation {
    /// Plain transmission and swapping.
    Bypass,
    /// Distil each elementary link once, then swap.
    SingleLink,
    /// Distil each link and again after every swap.
    Nested,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepeaterConfig {
    pub r: f64,
    /// Swap depth; the chain has m = 2^k sources.
    pub k: u32,
    /// Total distance in km (L = 2 m l, l the distance travelled by each mode).
    pub distance: f64,
    pub l_att: f64,
    pub n_th: f64,
    pub lambda_factor: f64,
    pub variant: Variant,
    pub distillation: Distillation,
}

impl RepeaterConfig {
    pub fn new(r: f64, k: u32, distance: f64, variant: Variant) -> Result<Self> {
        let cfg = Self {
            r,
            k,
            distance,
            l_att: DEFAULT_L_ATT,
            n_th: DEFAULT_N_TH,
            lambda_factor: DEFAULT_LAMBDA_FACTOR,
            variant,
            distillation: Distillation::SingleLink,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::param("r", self.r, "squeezing must be positive"));
        }
        if self.k > 30 {
            return Err(Error::param("k", self.k as f64, "swap depth must be at most 30"));
        }
        if !(self.distance > 0.0) || !self.distance.is_finite() {
            return Err(Error::param("L", self.distance, "distance must be positive"));
        }
        if !(self.l_att > 0.0) || !self.l_att.is_finite() {
            return Err(Error::param("l_att", self.l_att, "attenuation length must be positive"));
        }
        if !(self.n_th >= 0.0) || !self.n_th.is_finite() {
            return Err(Error::param("n_th", self.n_th, "must be non-negative"));
        }
        if !(self.lambda_factor > 0.0 && self.lambda_factor < 1.0) {
            return Err(Error::param(
                "lambda_factor",
                self.lambda_factor,
                "must lie strictly inside (0, 1)",
            ));
        }
        Ok(())
    }

    pub fn sources(&self) -> u64 {
        1u64 << self.k
    }

    /// Distance travelled by each mode of an elementary link, l = L/(2m).
    pub fn mode_distance(&self) -> f64 {
        self.distance / (2.0 * self.sources() as f64)
    }

    pub fn with_distance(&self, distance: f64) -> Self {
        Self { distance, ..*self }
    }
}

/// A TMSV whose modes each travel `span/2` km of fibre (a link of total span
/// `span`): C = T cosh 2r + (1 + 2n_th)(1 − T), S = T sinh 2r with
/// T = exp(−span / (2 l_att)).
pub fn transmit(r: f64, span: f64, l_att: f64, n_th: f64) -> Result<LinkState> {
    if !(span >= 0.0) {
        return Err(Error::param("l", span, "distance must be non-negative"));
    }
    if !(l_att > 0.0) {
        return Err(Error::param("l_att", l_att, "attenuation length must be positive"));
    }
    let channel = LossThermal::with_transmittance((-0.5 * span / l_att).exp(), n_th)?;
    Ok(channel.apply_symmetric(&SymmetricTwoMode::two_mode_squeezed(r)?))
}

/// The 50% in-station loss of variant ii, applied to both modes.
pub fn station_loss(s: &LinkState, n_th: f64) -> Result<LinkState> {
    Ok(LossThermal::with_transmittance(STATION_TRANSMITTANCE, n_th)?.apply_symmetric(s))
}

/// ε = (C² − S² − 1)/(2S); invariant under Fock-diagonal operations.
pub fn epsilon_symmetric(s: &LinkState) -> Result<f64> {
    if s.s() < SINGULAR_S {
        return Err(Error::SingularEpsilon { s: s.s() });
    }
    let (c, sv) = (s.c(), s.s());
    Ok((((c - 1.0) * (c + 1.0) - sv * sv) / (2.0 * sv)).max(0.0))
}

/// Gaussified output of photon replacement with parameter Λ:
/// C = (Λ²(1−ε²)+1)/((1−εΛ)²−Λ²), S = 2Λ/((1−εΛ)²−Λ²).
pub fn distilled_state(eps: f64, lambda: f64) -> Result<LinkState> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::param("epsilon", eps, "must be finite and non-negative"));
    }
    let bound = 1.0 / (1.0 + eps);
    if !(lambda > 0.0 && lambda < bound) {
        return Err(Error::LambdaOutOfRange { lambda, bound });
    }
    let den = (1.0 - eps * lambda).powi(2) - lambda * lambda;
    if !(den > 0.0) {
        return Err(Error::LambdaOutOfRange { lambda, bound });
    }
    SymmetricTwoMode::new(
        (lambda * lambda * (1.0 - eps * eps) + 1.0) / den,
        2.0 * lambda / den,
    )
}

/// Λ = factor/(1 + ε).
pub fn lambda_policy(eps: f64, factor: f64) -> Result<f64> {
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::param("lambda_factor", factor, "must lie strictly inside (0, 1)"));
    }
    Ok(factor / (1.0 + eps))
}

fn distil(s: &LinkState, factor: f64) -> Result<LinkState> {
    let eps = epsilon_symmetric(s)?;
    distilled_state(eps, lambda_policy(eps, factor)?)
}

/// Optimal Gaussian swap of two identical links: g(x, y) = (x − y²/2x, y²/2x).
pub fn swap(s: &LinkState) -> Result<LinkState> {
    let (x, y) = (s.c(), s.s());
    if !(x > 0.0) {
        return Err(Error::param("C", x, "swap needs C > 0"));
    }
    let y2 = y * y / (2.0 * x);
    SymmetricTwoMode::new(x - y2, y2)
}

/// State shared across the full chain described by `cfg`.
pub fn chain_state(cfg: &RepeaterConfig) -> Result<LinkState> {
    cfg.validate()?;
    let mut s = transmit(cfg.r, 2.0 * cfg.mode_distance(), cfg.l_att, cfg.n_th)?;
    if cfg.variant == Variant::II {
        s = station_loss(&s, cfg.n_th)?;
    }
    if cfg.distillation != Distillation::Bypass {
        s = distil(&s, cfg.lambda_factor)?;
    }
    for _ in 0..cfg.k {
        s = swap(&s)?;
        if cfg.distillation == Distillation::Nested {
            s = distil(&s, cfg.lambda_factor)?;
        }
    }
    Ok(s)
}

/// Duan Δ of the end-to-end state.
pub fn chain_delta(cfg: &RepeaterConfig) -> Result<f64> {
    Ok(chain_state(cfg)?.duan_delta())
}

/// Largest distance of direct TMSV transmission that remains entangled:
/// 2 l_att ln((1 + 2n_th − e^{−2r})/(2n_th)). `None` when n_th = 0 (unbounded).
pub fn direct_lmax(r: f64, l_att: f64, n_th: f64) -> Result<Option<f64>> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::param("r", r, "squeezing must be positive"));
    }
    if !(l_att > 0.0) {
        return Err(Error::param("l_att", l_att, "attenuation length must be positive"));
    }
    if !(n_th >= 0.0) || !n_th.is_finite() {
        return Err(Error::param("n_th", n_th, "must be non-negative"));
    }
    if n_th == 0.0 {
        return Ok(None);
    }
    // 1 − e^{−2r} via expm1 keeps precision at small r.
    let num = 2.0 * n_th - (-2.0 * r).exp_m1();
    Ok(Some(2.0 * l_att * (num / (2.0 * n_th)).ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceStatus {
    Bounded,
    /// Still entangled at the bracket cap.
    Unbounded,
    /// Not entangled even at the lower end of the bracket.
    NeverEntangled,
    /// Entangled up to where the link's S drops below the singular threshold
    /// and ε can no longer be evaluated.
    PrecisionLimited,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxDistance {
    pub km: f64,
    pub status: DistanceStatus,
    /// Δ at the returned distance (just inside the entangled region); NaN
    /// when the distance is unbounded.
    pub delta: f64,
    /// Whether Δ was found non-decreasing in L over the sampled bracket.
    pub monotone: bool,
}

/// Δ at distance L; links whose S is below the singular threshold count as
/// not certifiably entangled (Δ = ∞).
fn delta_at(cfg: &RepeaterConfig, distance: f64) -> Result<f64> {
    match chain_delta(&cfg.with_distance(distance)) {
        Err(Error::SingularEpsilon { .. }) => Ok(f64::INFINITY),
        other => other,
    }
}

const COARSE_SAMPLES: usize = 64;
const DENSE_STEP_KM: f64 = 1.0;

/// Largest L with Δ < 1, bracketed on [1, 5000] km (extended by doubling) and
/// bisected to 0.1 km. The sampled Δ(L) is checked for monotonicity; if it is
/// not monotone the first crossing is located by a dense scan instead.
pub fn max_distance(cfg: &RepeaterConfig) -> Result<MaxDistance> {
    cfg.validate()?;
    if cfg.n_th == 0.0 && cfg.k == 0 {
        // Pure loss leaves a single link entangled at every distance, and the
        // distilled link is entangled iff ε = (1 − T) tanh r < 1.
        return Ok(MaxDistance {
            km: f64::INFINITY,
            status: DistanceStatus::Unbounded,
            delta: f64::NAN,
            monotone: true,
        });
    }
    let d_low = delta_at(cfg, BRACKET_LOW_KM)?;
    if !(d_low < 1.0) {
        return Ok(MaxDistance {
            km: 0.0,
            status: DistanceStatus::NeverEntangled,
            delta: d_low,
            monotone: true,
        });
    }
    let mut hi = BRACKET_HIGH_KM;
    while delta_at(cfg, hi)? < 1.0 {
        if hi >= BRACKET_CAP_KM {
            return Ok(MaxDistance {
                km: f64::INFINITY,
                status: DistanceStatus::Unbounded,
                delta: f64::NAN,
                monotone: true,
            });
        }
        hi *= 2.0;
    }

    let samples: Vec<(f64, f64)> = (0..=COARSE_SAMPLES)
        .map(|i| {
            let l = BRACKET_LOW_KM + (hi - BRACKET_LOW_KM) * i as f64 / COARSE_SAMPLES as f64;
            delta_at(cfg, l).map(|d| (l, d))
        })
        .collect::<Result<_>>()?;
    let monotone = samples.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12);
    let (mut lo, mut up) = if monotone {
        let idx = samples.iter().position(|&(_, d)| d >= 1.0).expect("Δ(hi) ≥ 1");
        (samples[idx - 1].0, samples[idx].0)
    } else {
        log::warn!("Δ(L) not monotone on the bracket; falling back to a dense scan");
        let mut prev = BRACKET_LOW_KM;
        let mut l = prev;
        loop {
            l = (l + DENSE_STEP_KM).min(hi);
            if delta_at(cfg, l)? >= 1.0 {
                break (prev, l);
            }
            prev = l;
        }
    };
    while up - lo > DISTANCE_TOL_KM {
        let mid = 0.5 * (lo + up);
        if delta_at(cfg, mid)? < 1.0 {
            lo = mid;
        } else {
            up = mid;
        }
    }
    let status = if delta_at(cfg, up)?.is_infinite() {
        DistanceStatus::PrecisionLimited
    } else {
        DistanceStatus::Bounded
    };
    Ok(MaxDistance {
        km: lo,
        status,
        delta: delta_at(cfg, lo)?,
        monotone,
    })
}

/// Row kinds of a scan table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanKind {
    Direct,
    Repeater(Variant),
}

impl ScanKind {
    pub fn label(self) -> &'static str {
        match self {
            ScanKind::Direct => "direct",
            ScanKind::Repeater(v) => v.label(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub r: f64,
    pub m: u64,
    pub kind: ScanKind,
    pub l_max_km: f64,
    pub delta_at_lmax: f64,
    pub status: DistanceStatus,
}

/// Scan parameters shared by every row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanSettings {
    pub l_att: f64,
    pub n_th: f64,
    pub lambda_factor: f64,
    pub distillation: Distillation,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            l_att: DEFAULT_L_ATT,
            n_th: DEFAULT_N_TH,
            lambda_factor: DEFAULT_LAMBDA_FACTOR,
            distillation: Distillation::SingleLink,
        }
    }
}

/// One task of a scan: a direct-transmission row (`k = None`) or a repeater
/// row of depth k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanTask {
    pub r: f64,
    pub k: Option<u32>,
}

/// Tasks in r-major order: for each r, the direct row then k in `k_set` order.
pub fn scan_tasks(r_grid: &[f64], k_set: &[u32]) -> Result<Vec<ScanTask>> {
    if r_grid.is_empty() {
        return Err(Error::param("r_grid", 0.0, "need at least one squeezing value"));
    }
    if k_set.is_empty() {
        return Err(Error::param("k_set", 0.0, "need at least one swap depth"));
    }
    Ok(r_grid
        .iter()
        .flat_map(|&r| {
            std::iter::once(ScanTask { r, k: None })
                .chain(k_set.iter().map(move |&k| ScanTask { r, k: Some(k) }))
        })
        .collect())
}

pub fn scan_row(task: ScanTask, variant: Variant, settings: &ScanSettings) -> Result<ScanRow> {
    match task.k {
        None => {
            let lmax = direct_lmax(task.r, settings.l_att, settings.n_th)?;
            let (km, status) = match lmax {
                Some(l) => (l, DistanceStatus::Bounded),
                None => (f64::INFINITY, DistanceStatus::Unbounded),
            };
            let delta = if km.is_finite() {
                transmit(task.r, km, settings.l_att, settings.n_th)?.duan_delta()
            } else {
                f64::NAN
            };
            Ok(ScanRow {
                r: task.r,
                m: 1,
                kind: ScanKind::Direct,
                l_max_km: km,
                delta_at_lmax: delta,
                status,
            })
        }
        Some(k) => {
            let cfg = RepeaterConfig {
                r: task.r,
                k,
                distance: BRACKET_LOW_KM,
                l_att: settings.l_att,
                n_th: settings.n_th,
                lambda_factor: settings.lambda_factor,
                variant,
                distillation: settings.distillation,
            };
            let md = max_distance(&cfg)?;
            Ok(ScanRow {
                r: task.r,
                m: cfg.sources(),
                kind: ScanKind::Repeater(variant),
                l_max_km: md.km,
                delta_at_lmax: md.delta,
                status: md.status,
            })
        }
    }
}

/// Sequential scan over r × k (plus the direct row per r).
pub fn scan(
    r_grid: &[f64],
    k_set: &[u32],
    variant: Variant,
    settings: &ScanSettings,
) -> Result<Vec<ScanRow>> {
    scan_tasks(r_grid, k_set)?
        .into_iter()
        .map(|t| scan_row(t, variant, settings))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swap_examples() {
        let s = swap(&SymmetricTwoMode::new(2.0, 1.0).unwrap()).unwrap();
        assert!((s.c() - 1.75).abs() < 1e-15 && (s.s() - 0.25).abs() < 1e-15);
        let t = swap(&SymmetricTwoMode::new(1.5, 0.0).unwrap()).unwrap();
        assert_eq!((t.c(), t.s()), (1.5, 0.0));
    }

    #[test]
    fn distilled_pure_example() {
        let s = distilled_state(0.0, 0.5).unwrap();
        assert!((s.c() - 5.0 / 3.0).abs() < 1e-14 && (s.s() - 4.0 / 3.0).abs() < 1e-14);
        assert!(distilled_state(0.2, 1.0 / 1.2).is_err());
        assert!(distilled_state(0.2, 0.0).is_err());
    }

    #[test]
    fn lambda_policy_examples() {
        assert!((lambda_policy(0.0, 0.99).unwrap() - 0.99).abs() < 1e-15);
        assert!((lambda_policy(1.0, 0.99).unwrap() - 0.495).abs() < 1e-15);
        assert!(lambda_policy(0.0, 1.0).is_err());
    }

    #[test]
    fn singular_epsilon() {
        let s = SymmetricTwoMode::new(1.2, 0.0).unwrap();
        assert!(matches!(epsilon_symmetric(&s), Err(Error::SingularEpsilon { .. })));
    }

    #[test]
    fn transmit_limits() {
        let s = transmit(0.7, 0.0, 22.0, 1e-8).unwrap();
        assert!((s.c() - 1.4f64.cosh()).abs() < 1e-14);
        let far = transmit(0.7, 1e5, 22.0, 1e-8).unwrap();
        assert!((far.c() - (1.0 + 2e-8)).abs() < 1e-14 && far.s() < 1e-300);
    }

    #[test]
    fn scan_order_is_r_major() {
        let t = scan_tasks(&[0.2, 0.4], &[0, 1]).unwrap();
        let keys: Vec<_> = t.iter().map(|t| (t.r, t.k)).collect();
        assert_eq!(
            keys,
            vec![(0.2, None), (0.2, Some(0)), (0.2, Some(1)), (0.4, None), (0.4, Some(0)), (0.4, Some(1))]
        );
    }
}
