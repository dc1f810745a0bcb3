//! `gaussify`: convergence report for the pumping Gaussifier.

use std::path::Path;

use cvdistill::fock::{filtered_object, photon_replacement, FockDensityMatrix};
use cvdistill::protocols::{
    central_limit, gaussian_limit, matrix_element_convergence, moment_convergence_report,
    sup_deviation, CharFunHandle, MatrixElementReport, MomentReport,
};
use cvdistill::GaussianFilter;
use serde::Serialize;

use crate::config::{invalid, Config};
use crate::output::{sig12, write_csv, write_json};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct GaussifySettings {
    pub input: String,
    pub r: f64,
    /// Reflectivity of the photon-replacement beam splitter (η = √(1 − R)).
    pub reflectivity: f64,
    pub beta: f64,
    pub cutoff: usize,
    pub ns: Vec<u64>,
    pub k_max: usize,
    pub r0: f64,
    pub grid_density: f64,
    pub fock_steps: usize,
}

impl GaussifySettings {
    pub fn from_config(mut cfg: Config) -> Result<Self, CliError> {
        let s = Self {
            input: cfg.take("input", "photon_replaced".to_string())?,
            r: cfg.take("r", 0.4)?,
            reflectivity: cfg.take("R", 0.4375)?,
            beta: cfg.take("beta", 1.0)?,
            cutoff: cfg.take("cutoff", 12usize)?,
            ns: cfg.take_list("ns", &[1u64, 2, 4, 8, 16])?,
            k_max: cfg.take("k_max", 4usize)?,
            r0: cfg.take("r0", 2.0)?,
            grid_density: cfg.take("grid_density", 4.0)?,
            fock_steps: cfg.take("fock_steps", 4usize)?,
        };
        cfg.finish()?;
        if !matches!(s.input.as_str(), "photon_replaced" | "gaussian") {
            return Err(invalid("input", &s.input, "expected photon_replaced or gaussian").into());
        }
        if !(s.r > 0.0 && s.r.is_finite()) {
            return Err(invalid("r", s.r, "squeezing must be positive").into());
        }
        if !(0.0..1.0).contains(&s.reflectivity) {
            return Err(invalid("R", s.reflectivity, "reflectivity must lie in [0, 1)").into());
        }
        if !(s.beta > 0.0 && s.beta.is_finite()) {
            return Err(invalid("beta", s.beta, "filter strength must be positive").into());
        }
        if s.cutoff < 4 {
            return Err(invalid("cutoff", s.cutoff, "need at least 4 levels per mode").into());
        }
        if s.ns.is_empty() || s.ns.contains(&0) {
            return Err(invalid("ns", format!("{:?}", s.ns), "need copy counts >= 1").into());
        }
        if s.k_max == 0 {
            return Err(invalid("k_max", 0, "need k_max >= 1").into());
        }
        if !(s.r0 > 0.0) || !(s.grid_density > 0.0) {
            return Err(invalid("r0", s.r0, "radius and grid density must be positive").into());
        }
        if s.fock_steps == 0 {
            return Err(invalid("fock_steps", 0, "need at least one Fock step").into());
        }
        Ok(s)
    }
}

#[derive(Debug, Serialize)]
pub struct DeviationPoint {
    pub n: u64,
    pub sup_deviation: f64,
}

#[derive(Debug, Serialize)]
pub struct GaussifyReport {
    pub settings: GaussifySettings,
    pub sup_deviation: Vec<DeviationPoint>,
    pub sup_deviation_decreasing: bool,
    pub moments: MomentReport,
    pub matrix_elements: MatrixElementReport,
}

pub fn compute(s: &GaussifySettings) -> Result<GaussifyReport, CliError> {
    let filter = GaussianFilter::uniform(s.beta, 2)?;
    let tmsv = FockDensityMatrix::tmsv(s.r, s.cutoff)?;
    let rho1 = if s.input == "gaussian" {
        tmsv
    } else {
        photon_replacement(&tmsv, (1.0 - s.reflectivity).sqrt())?.0
    };
    let tau1 = filtered_object(&rho1, &filter)?;
    let chi1 = CharFunHandle::from_fock(&tau1)?;
    let limit = gaussian_limit(chi1.second_moments())?;
    let mut devs = Vec::new();
    for &n in &s.ns {
        let chi_n = central_limit(&chi1, n)?;
        devs.push(DeviationPoint {
            n,
            sup_deviation: sup_deviation(&chi_n, &limit, s.r0, s.grid_density)?,
        });
    }
    let decreasing = devs.windows(2).all(|w| w[1].sup_deviation < w[0].sup_deviation);
    let ns_usize: Vec<usize> = s.ns.iter().map(|&n| n as usize).collect();
    let moments = moment_convergence_report(&tau1, s.k_max, &ns_usize)?;
    let pairs = vec![
        (vec![0, 0], vec![0, 0]),
        (vec![1, 1], vec![0, 0]),
        (vec![1, 0], vec![1, 0]),
        (vec![1, 1], vec![1, 1]),
        (vec![2, 2], vec![0, 0]),
    ];
    let fock_ns: Vec<usize> = (1..=s.fock_steps).collect();
    let matrix_elements = matrix_element_convergence(&rho1, &filter, &pairs, &fock_ns)?;
    Ok(GaussifyReport {
        settings: s.clone(),
        sup_deviation: devs,
        sup_deviation_decreasing: decreasing,
        moments,
        matrix_elements,
    })
}

fn index_label(idx: &[usize]) -> String {
    idx.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn write(report: &GaussifyReport, out: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    write_json(&out.join("gaussify_report.json"), report)?;
    let rows: Vec<Vec<String>> = report
        .sup_deviation
        .iter()
        .map(|d| vec![d.n.to_string(), sig12(d.sup_deviation)])
        .collect();
    write_csv(&out.join("gaussify_deviation.csv"), &["N", "sup_deviation"], &rows)?;

    let m = &report.moments;
    let mut rows = Vec::new();
    for s in &m.series {
        for (i, &n) in m.ns.iter().enumerate() {
            rows.push(vec![
                s.direction.to_string(),
                s.k.to_string(),
                n.to_string(),
                sig12(s.moments[i]),
                sig12(s.wick_target),
                sig12(s.deviations[i]),
            ]);
        }
    }
    write_csv(
        &out.join("gaussify_moments.csv"),
        &["direction", "k", "N", "moment", "wick_target", "deviation"],
        &rows,
    )?;

    let me = &report.matrix_elements;
    let mut rows = Vec::new();
    for s in &me.series {
        for (i, &n) in me.ns.iter().enumerate() {
            let fid = me
                .fidelity_to_limit
                .as_ref()
                .map(|f| sig12(f[i]))
                .unwrap_or_default();
            rows.push(vec![
                index_label(&s.row),
                index_label(&s.col),
                n.to_string(),
                sig12(s.tau[i].0),
                sig12(s.tau[i].1),
                sig12(s.rho_normalized[i].0),
                sig12(s.rho_normalized[i].1),
                s.tau_limit.map(|t| sig12(t.0)).unwrap_or_default(),
                s.rho_limit.map(|t| sig12(t.0)).unwrap_or_default(),
                fid,
            ]);
        }
    }
    write_csv(
        &out.join("gaussify_elements.csv"),
        &[
            "row", "col", "N", "tau_re", "tau_im", "rho_re", "rho_im", "tau_limit_re",
            "rho_limit_re", "fidelity_to_limit",
        ],
        &rows,
    )
}

pub fn run(cfg: Config, out: &Path) -> Result<(), CliError> {
    let settings = GaussifySettings::from_config(cfg)?;
    let report = compute(&settings)?;
    write(&report, out)?;
    for d in &report.sup_deviation {
        println!("N={:<4} sup|chi_N - chi_gauss| = {}", d.n, sig12(d.sup_deviation));
    }
    println!(
        "sup deviation decreasing: {}; limit state physical: {}; reports in {}",
        report.sup_deviation_decreasing,
        report.matrix_elements.limit_physical,
        out.display()
    );
    Ok(())
}
