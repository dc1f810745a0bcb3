use std::path::Path;
use std::process::{Command, Output};

use cvdistill::repeater::{direct_lmax, DEFAULT_L_ATT, DEFAULT_N_TH};

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvdistill"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).expect("csv readable");
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn gaussify_default_writes_reports_with_decreasing_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["gaussify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "gaussify_report.json",
        "gaussify_deviation.csv",
        "gaussify_moments.csv",
        "gaussify_elements.csv",
    ] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let (header, rows) = read_csv(&dir.path().join("gaussify_deviation.csv"));
    assert_eq!(header, ["N", "sup_deviation"]);
    let devs: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(devs.len(), 5);
    assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("gaussify_report.json")).unwrap()).unwrap();
    assert_eq!(report["sup_deviation_decreasing"], true);
    let fid = report["matrix_elements"]["fidelity_to_limit"].as_array().unwrap();
    let fid: Vec<f64> = fid.iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(fid.windows(2).all(|w| w[1] > w[0]) && fid[0] > 0.99, "{fid:?}");
}

#[test]
fn gaussify_gaussian_input_is_already_the_limit() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--set", "input=gaussian", "--set", "fock_steps=1", "gaussify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = read_csv(&dir.path().join("gaussify_deviation.csv"));
    for r in rows {
        let d: f64 = r[1].parse().unwrap();
        assert!(d <= 1e-10, "N={} deviation {d}", r[0]);
    }
}

#[test]
fn out_of_range_reflectivity_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--set", "R=1.5", "gaussify"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`R`"), "{}", stderr(&o));
    assert!(!dir.path().join("gaussify_report.json").exists());
}

#[test]
fn unknown_key_and_bad_syntax_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--set", "bogus=1", "repeater-scan"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"));
    let cfg = dir.path().join("scenario.cfg");
    std::fs::write(&cfg, "# comment\nr_min 0.1\n").unwrap();
    let o = run(dir.path(), &["--config", cfg.to_str().unwrap(), "repeater-scan"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_overrides_drive_the_scan() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.cfg");
    std::fs::write(&cfg, "# small scan\nr_min = 0.5\nr_max = 0.7\nk_set = 1\n").unwrap();
    let o = run(
        dir.path(),
        &["--config", cfg.to_str().unwrap(), "--variant", "ii", "--set", "r_max=0.6", "repeater-scan"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = read_csv(&dir.path().join("repeater_scan.csv"));
    let labels: Vec<(String, String, String)> =
        rows.iter().map(|r| (r[0].clone(), r[1].clone(), r[2].clone())).collect();
    let expect: Vec<(String, String, String)> = [
        ("0.5", "1", "direct"),
        ("0.5", "2", "ii"),
        ("0.6", "1", "direct"),
        ("0.6", "2", "ii"),
    ]
    .iter()
    .map(|(a, b, c)| (a.to_string(), b.to_string(), c.to_string()))
    .collect();
    assert_eq!(labels, expect);
}

#[test]
fn bypass_scan_reproduces_direct_transmission() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["--variant", "i", "--set", "k_set=0", "--set", "distillation=bypass", "repeater-scan"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let path = dir.path().join("repeater_scan.csv");
    let first_line = std::fs::read_to_string(&path).unwrap().lines().next().unwrap().to_string();
    assert_eq!(first_line, "r,m,variant,L_max_km,delta_at_Lmax");
    let (_, rows) = read_csv(&path);
    assert_eq!(rows.len(), 40);
    for pair in rows.chunks(2) {
        let r: f64 = pair[0][0].parse().unwrap();
        assert_eq!(pair[0][2], "direct");
        assert_eq!(pair[1][2], "i");
        let exact = direct_lmax(r, DEFAULT_L_ATT, DEFAULT_N_TH).unwrap().unwrap();
        let direct: f64 = pair[0][3].parse().unwrap();
        let chain: f64 = pair[1][3].parse().unwrap();
        assert!((direct - exact).abs() < 1e-6 * exact, "r={r}");
        assert!((chain - exact).abs() <= 0.1, "r={r}: {chain} vs {exact}");
    }
}

#[test]
fn scan_is_deterministic_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--set", "r_max=0.8", "--set", "k_set=0,2,3", "repeater-scan"];
    let oa = run(a.path(), &[&["--threads", "1"], &args[..]].concat());
    let ob = run(b.path(), &[&["--threads", "4"], &args[..]].concat());
    assert!(oa.status.success() && ob.status.success());
    let fa = std::fs::read(a.path().join("repeater_scan.csv")).unwrap();
    let fb = std::fs::read(b.path().join("repeater_scan.csv")).unwrap();
    assert_eq!(fa, fb);
}

#[test]
fn verify_passes_and_names_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify"]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}{}", stderr(&o));
    for name in [
        "conjugation-lemma",
        "wick",
        "pumping-recursive",
        "zero-persistence",
        "schur-vs-fock",
        "boundary-consistency",
        "epsilon-invariance",
        "swap-oracle",
    ] {
        assert!(text.contains(&format!("PASS {name}:")), "{name} missing in\n{text}");
    }
}

#[test]
fn injected_swap_fault_fails_the_swap_check_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--set", "fault=swap_sign", "verify"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL swap-oracle"));
    assert!(stderr(&o).contains("swap-oracle"));
    assert_eq!(stdout(&o).matches("FAIL").count(), 1);
}

#[test]
fn verify_passes_at_small_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--cutoff", "8", "verify"]);
    assert!(o.status.success(), "{}", stdout(&o));
}
