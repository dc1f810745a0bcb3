//! `repeater-scan`: maximum distance over squeezing and repeater depth.

use std::path::Path;

use cvdistill::repeater::{
    scan_row, Distillation, ScanKind, ScanRow, ScanSettings, ScanTask, Variant,
};
use rayon::prelude::*;

use crate::config::{invalid, Config};
use crate::output::{sig12, write_csv};
use crate::CliError;

pub const HEADER: [&str; 5] = ["r", "m", "variant", "L_max_km", "delta_at_Lmax"];

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub r_grid: Vec<f64>,
    pub k_set: Vec<u32>,
    pub variants: Vec<Variant>,
    pub settings: ScanSettings,
}

fn parse_distillation(s: &str) -> Option<Distillation> {
    match s {
        "single_link" | "on" => Some(Distillation::SingleLink),
        "bypass" | "off" => Some(Distillation::Bypass),
        "nested" => Some(Distillation::Nested),
        _ => None,
    }
}

impl ScanConfig {
    pub fn from_config(mut cfg: Config) -> Result<Self, CliError> {
        let r_min: f64 = cfg.take("r_min", 0.1)?;
        let r_max: f64 = cfg.take("r_max", 2.0)?;
        let r_step: f64 = cfg.take("r_step", 0.1)?;
        let k_set: Vec<u32> = cfg.take_list("k_set", &[0, 1, 2, 3, 4])?;
        let variant: String = cfg.take("variant", "both".to_string())?;
        let l_att: f64 = cfg.take("l_att", cvdistill::repeater::DEFAULT_L_ATT)?;
        let n_th: f64 = cfg.take("n_th", cvdistill::repeater::DEFAULT_N_TH)?;
        let lambda_factor: f64 = cfg.take("lambda_factor", cvdistill::repeater::DEFAULT_LAMBDA_FACTOR)?;
        let distillation: String = cfg.take("distillation", "single_link".to_string())?;
        cfg.finish()?;

        if !(r_min > 0.0) || !r_min.is_finite() {
            return Err(invalid("r_min", r_min, "squeezing must be positive").into());
        }
        if !(r_max >= r_min) || !r_max.is_finite() {
            return Err(invalid("r_max", r_max, "must be finite and at least r_min").into());
        }
        if !(r_step > 0.0) {
            return Err(invalid("r_step", r_step, "step must be positive").into());
        }
        if k_set.is_empty() || k_set.iter().any(|&k| k > 20) {
            return Err(invalid("k_set", format!("{k_set:?}"), "need swap depths in 0..=20").into());
        }
        let variants = match variant.as_str() {
            "both" => vec![Variant::I, Variant::II],
            v => vec![v.parse::<Variant>().map_err(|_| invalid("variant", v, "expected i, ii or both"))?],
        };
        let distillation = parse_distillation(&distillation).ok_or_else(|| {
            invalid("distillation", &distillation, "expected single_link, bypass or nested")
        })?;
        if !(l_att > 0.0) {
            return Err(invalid("l_att", l_att, "attenuation length must be positive").into());
        }
        if !(n_th >= 0.0) || !n_th.is_finite() {
            return Err(invalid("n_th", n_th, "must be non-negative").into());
        }
        if !(lambda_factor > 0.0 && lambda_factor < 1.0) {
            return Err(invalid("lambda_factor", lambda_factor, "must lie strictly inside (0, 1)").into());
        }
        let count = ((r_max - r_min) / r_step + 1e-9).floor() as usize + 1;
        // Rounding to 12 digits keeps grid values such as 0.3 exact in the output.
        let r_grid = (0..count)
            .map(|i| sig12(r_min + r_step * i as f64).parse().expect("formatted float"))
            .collect();
        Ok(Self {
            r_grid,
            k_set,
            variants,
            settings: ScanSettings {
                l_att,
                n_th,
                lambda_factor,
                distillation,
            },
        })
    }

    /// r-major task list: the direct row, then every (variant, k).
    fn tasks(&self) -> Vec<(ScanTask, Variant)> {
        let mut out = Vec::new();
        for &r in &self.r_grid {
            out.push((ScanTask { r, k: None }, Variant::I));
            for &v in &self.variants {
                for &k in &self.k_set {
                    out.push((ScanTask { r, k: Some(k) }, v));
                }
            }
        }
        out
    }
}

pub fn compute(cfg: &ScanConfig) -> Result<Vec<ScanRow>, CliError> {
    let rows: Result<Vec<_>, _> = cfg
        .tasks()
        .into_par_iter()
        .map(|(task, v)| scan_row(task, v, &cfg.settings))
        .collect();
    Ok(rows?)
}

pub fn csv_rows(rows: &[ScanRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|row| {
            vec![
                sig12(row.r),
                row.m.to_string(),
                match row.kind {
                    ScanKind::Direct => "direct".to_string(),
                    ScanKind::Repeater(v) => v.label().to_string(),
                },
                sig12(row.l_max_km),
                sig12(row.delta_at_lmax),
            ]
        })
        .collect()
}

pub fn run(cfg: Config, out: &Path) -> Result<(), CliError> {
    let scan = ScanConfig::from_config(cfg)?;
    let rows = compute(&scan)?;
    std::fs::create_dir_all(out)?;
    let path = out.join("repeater_scan.csv");
    write_csv(&path, &HEADER, &csv_rows(&rows))?;
    let direct_best = rows
        .iter()
        .filter(|r| r.kind == ScanKind::Direct)
        .map(|r| r.l_max_km)
        .fold(0.0f64, f64::max);
    println!("direct transmission: best L_max {} km", sig12(direct_best));
    for &v in &scan.variants {
        for &k in &scan.k_set {
            let best = rows
                .iter()
                .filter(|r| r.kind == ScanKind::Repeater(v) && r.m == 1u64 << k)
                .max_by(|a, b| a.l_max_km.total_cmp(&b.l_max_km));
            if let Some(b) = best {
                println!(
                    "variant {:<2} m={:<3} best L_max {} km at r={}",
                    v.label(),
                    b.m,
                    sig12(b.l_max_km),
                    sig12(b.r)
                );
            }
        }
    }
    println!("{} rows written to {}", rows.len(), path.display());
    Ok(())
}
