//! End-to-end checks of the `kinetic` binary: exit codes and output files.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kinetic"))
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn verify_passes_on_bundled_config() {
    let out = tmp_dir("verify_mono");
    let status = bin()
        .args(["verify", "--config"])
        .arg(bundled("mono_hard_sphere.cfg"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("overall: PASS"), "report:\n{report}");
    assert!(out.join("conservation.csv").exists());
    assert!(out.join("nu_bounds.csv").exists());
}

#[test]
fn verify_supports_suite_selection() {
    let out = tmp_dir("verify_subset");
    let status = bin()
        .args(["verify", "--config"])
        .arg(bundled("mono_hard_sphere.cfg"))
        .arg("--out")
        .arg(&out)
        .args(["--suite", "conservation", "--suite", "equilibrium"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("suite conservation: PASS"));
    assert!(!report.contains("suite galerkin"));
}

#[test]
fn unknown_suite_is_usage_error() {
    let status = bin()
        .args(["verify", "--config"])
        .arg(bundled("mono_hard_sphere.cfg"))
        .args(["--suite", "nonsense"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn invalid_configs_exit_2() {
    let dir = tmp_dir("bad_configs");
    let base = std::fs::read_to_string(bundled("mono_hard_sphere.cfg")).unwrap();

    // eta = 1 is outside the admissible range
    let eta_one = write_cfg(&dir, "eta_one.cfg", &base.replace("eta = 0.0", "eta = 1.0"));
    // asymmetric interaction matrix needs two species
    let asym = write_cfg(
        &dir,
        "asym.cfg",
        "[species.1]\nmass = 1.0\nkind = monatomic\ndensity = 1.0\n\
         [species.2]\nmass = 2.0\nkind = polyatomic\ndof = 4.0\ndensity = 0.8\n\
         [model]\neta = 0.0\nc.1 = 1.0 0.8\nc.2 = 0.7 1.2\n",
    );
    for cfg in [&eta_one, &asym] {
        let status = bin().args(["verify", "--config"]).arg(cfg).status().unwrap();
        assert_eq!(status.code(), Some(2), "config {}", cfg.display());
    }
}

#[test]
fn nu_table_writes_expected_grid() {
    let out = tmp_dir("nu_table");
    let status = bin()
        .args(["nu-table", "--config"])
        .arg(bundled("mono_hard_sphere.cfg"))
        .arg("--out")
        .arg(&out)
        .args(["--grid-xi-max", "2", "--grid-i-max", "2"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("nu_table.csv")).unwrap();
    // header + 1 species x 9 |xi| values x 3 I values
    assert_eq!(csv.lines().count(), 1 + 9 * 3);
    // hard sphere: nu / (1 + |xi|) must stay within a factor of 10
    let ratios: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max / min <= 10.0);
}

#[test]
fn nu_table_rejects_empty_grid() {
    let status = bin()
        .args(["nu-table", "--config"])
        .arg(bundled("mono_hard_sphere.cfg"))
        .args(["--grid-xi-max", "0"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn spectrum_reports_kernel_dimension() {
    let out = tmp_dir("spectrum_mono");
    let status = bin()
        .args(["spectrum", "--config"])
        .arg(bundled("mono_hard_sphere.cfg"))
        .arg("--out")
        .arg(&out)
        .args(["--basis-order", "3"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let summary = std::fs::read_to_string(out.join("spectrum_summary.txt")).unwrap();
    // one species: the kernel of L is spanned by the s + 4 = 5 invariants
    assert!(summary.contains("kernel eigenvalues below 1e-6 ||L||: 5 (expected 5)"));
    assert!(out.join("eigenvalues.csv").exists());
}

#[test]
fn spectrum_rejects_basis_order_below_minimum() {
    let status = bin()
        .args(["spectrum", "--config"])
        .arg(bundled("mono_hard_sphere.cfg"))
        .args(["--basis-order", "1"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
