//! End-to-end runs of the subcommands through [`crate::execute`].

use std::fs;
use std::path::Path;

use clap::Parser;
use hmfdamp::spectral::MixedField;

use crate::config::Config;
use crate::{execute, Cli, CliError};

const BASE: &[&str] = &[
    "grid.n_x=16",
    "grid.n_v=64",
    "grid.L=8",
    "scheme.variant=strang",
    "scheme.h=0.1",
];

fn hmfdamp(sub: &str, dir: &Path, extra: &[&str]) -> Result<(), CliError> {
    let mut args = vec!["hmfdamp".to_string(), sub.to_string()];
    for s in BASE.iter().chain(extra) {
        args.push("--set".into());
        args.push(s.to_string());
    }
    args.push("--set".into());
    args.push(format!("output.dir={}", dir.display()));
    execute(&Cli::try_parse_from(args).expect("valid arguments"))
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn penrose_on_unit_maxwellian_passes() {
    let dir = tempfile::tempdir().unwrap();
    hmfdamp("penrose", dir.path(), &[]).unwrap();
    let summary = fs::read_to_string(dir.path().join("penrose_summary.txt")).unwrap();
    assert!(summary.contains("pass = true"));
    assert!(summary.contains("zero_count = 0"));
}

#[test]
fn zero_epsilon_run_has_zero_modes() {
    let dir = tempfile::tempdir().unwrap();
    hmfdamp("run", dir.path(), &["sim.epsilon=0", "sim.T=2"]).unwrap();
    let csv = fs::read_to_string(dir.path().join("series.csv")).unwrap();
    for name in ["re_zeta_p1", "im_zeta_p1", "abs_zeta_p1", "re_zeta_m1", "im_zeta_m1"] {
        assert!(column(&csv, name).iter().all(|&v| v == 0.0), "{name}");
    }
    assert_eq!(column(&csv, "t").len(), 21);
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let e = hmfdamp("converge", dir.path(), &["analysis.ladder=0.2, 0.1"]).unwrap_err();
    assert_eq!(e.exit_code(), 1);
    assert!(e.to_string().contains("analysis.ladder"), "{e}");
    let e = hmfdamp("run", dir.path(), &["scheme.h=-0.1"]).unwrap_err();
    assert_eq!(e.exit_code(), 1);
    assert!(e.to_string().contains("scheme.h"), "{e}");
    let e = hmfdamp("run", dir.path(), &["sim.T=0.15"]).unwrap_err();
    assert_eq!(e.exit_code(), 1);
}

#[test]
fn blow_up_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let e = hmfdamp("run", dir.path(), &["sim.blowup_factor=0.5", "sim.T=1"]).unwrap_err();
    assert_eq!(e.exit_code(), 2, "{e}");
}

#[test]
fn config_file_lines_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.txt");
    fs::write(
        &path,
        "grid.n_x = 16\ngrid.n_v = 64\n\ngrid.L = 8\nscheme.variant = strang\nscheme.h = 0.1\nsim.epsilon = 0.01\n",
    )
    .unwrap();
    let c = Config::load(&path, &["sim.epsilon=0.02".into()]).unwrap();
    assert!(c.canonical().contains("sim.epsilon = 0.02\n"));
    fs::write(&path, "grid.n_x = 16\nmystery = 3\n").unwrap();
    let e = Config::load(&path, &[]).unwrap_err();
    assert_eq!(e.exit_code(), 1);
    let msg = e.to_string();
    assert!(msg.contains("line 2") && msg.contains("mystery"), "{msg}");
}

#[test]
fn run_then_dampfit_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    hmfdamp("run", dir.path(), &["grid.n_v=256", "sim.T=25", "scheme.h=0.05", "sim.snapshot_times=5"]).unwrap();
    hmfdamp("dampfit", dir.path(), &["grid.n_v=256", "scheme.h=0.05"]).unwrap();
    let report = fs::read_to_string(dir.path().join("damping_report.csv")).unwrap();
    let rate = column(&report, "rate")[0];
    assert!((rate - 1.136).abs() < 0.06, "{report}");
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("config_sha256 = "));
    assert!(manifest.contains("artifact = damping_report.csv"));
    assert!(dir.path().join("run_info.txt").exists());

    let snap = dir.path().join("snapshots/g_00000100.hmf");
    let field = MixedField::load(&snap).unwrap();
    let again = dir.path().join("again.hmf");
    field.save(&again).unwrap();
    assert_eq!(fs::read(&snap).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn csv_bodies_do_not_depend_on_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    hmfdamp("run", &a, &["sim.T=2", "sim.perturbation=multi_mode", "seed=2"]).unwrap();
    hmfdamp("run", &b, &["sim.T=2", "sim.perturbation=multi_mode", "seed=2"]).unwrap();
    assert_eq!(
        fs::read(a.join("series.csv")).unwrap(),
        fs::read(b.join("series.csv")).unwrap()
    );
}

#[test]
fn volterra_and_scatter_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    hmfdamp("volterra", dir.path(), &["analysis.volterra_T=4", "analysis.volterra_dt=0.01"]).unwrap();
    let summary = fs::read_to_string(dir.path().join("volterra_summary.txt")).unwrap();
    assert!(summary.contains("sup_distance"));
    hmfdamp("scatter", dir.path(), &["sim.T=8", "analysis.checkpoints=2, 4, 8"]).unwrap();
    let csv = fs::read_to_string(dir.path().join("scatter_report.csv")).unwrap();
    let errs = column(&csv, "error");
    assert_eq!(errs.len(), 2);
    assert!(errs[1] < errs[0]);
    assert!(dir.path().join("weighted_norms.csv").exists());
}

#[test]
fn small_converge_study() {
    let dir = tempfile::tempdir().unwrap();
    hmfdamp(
        "converge",
        dir.path(),
        &[
            "analysis.ladder=0.2, 0.1, 0.05",
            "analysis.ladder_T=2",
            "analysis.limit_T=4",
            "analysis.checkpoints=2, 4",
        ],
    )
    .unwrap();
    let summary = fs::read_to_string(dir.path().join("order_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5, "{summary}");
    assert!(dir.path().join("growth_summary.csv").exists());
}
