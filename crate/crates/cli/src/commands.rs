//! Subcommand implementations.

use std::path::PathBuf;
use std::sync::Arc;

use hmfdamp::convergence::{growth_study, limit_state_suite, order_suite, LadderSpec, OrderReport};
use hmfdamp::damping::{fit_damping, scattering_limit, weighted_norm_series};
use hmfdamp::dynamics::{run, SchemeSpec, StationaryState};
use hmfdamp::penrose::{landau_root, penrose_check};
use hmfdamp::spectral::{fourier_coefficient, WeightedNormSpec};
use hmfdamp::volterra::{linear_prediction, solve_fourier_domain, solve_time_domain, VolterraProblem};
use hmfdamp::Complex64;

use crate::config::Config;
use crate::output::{num, Csv, Output};
use crate::CliError;

pub const SERIES_HEADER: [&str; 10] = [
    "t",
    "re_zeta_p1",
    "im_zeta_p1",
    "abs_zeta_p1",
    "re_zeta_m1",
    "im_zeta_m1",
    "norm_H1",
    "norm_Hs",
    "mass",
    "l2",
];

fn flag(b: bool) -> String {
    b.to_string()
}

fn opt(x: Option<f64>) -> String {
    num(x.unwrap_or(f64::NAN))
}

fn norm_index(specs: &[WeightedNormSpec], s: u32, nu: f64) -> usize {
    specs
        .iter()
        .position(|sp| sp.s == s && sp.nu == nu)
        .expect("norm recorded by construction")
}

pub fn cmd_run(cfg: &Config, out: &mut Output) -> Result<(), CliError> {
    let rc = cfg.run_config()?;
    let traj = run(&rc)?;
    let nu = cfg.nu();
    let h1 = norm_index(&rc.norms, 1, nu);
    let hs = norm_index(&rc.norms, cfg.analysis_s(), nu);
    let mut csv = Csv::new(&SERIES_HEADER);
    for r in &traj.records {
        csv.row(&[
            num(r.t),
            num(r.zeta_p1.re),
            num(r.zeta_p1.im),
            num(r.zeta_p1.norm()),
            num(r.zeta_m1.re),
            num(r.zeta_m1.im),
            num(r.norms[h1]),
            num(r.norms[hs]),
            num(r.mass),
            num(r.l2),
        ]);
    }
    out.csv("series.csv", csv)?;
    for s in &traj.snapshots {
        out.field(&format!("snapshots/g_{:08}.hmf", s.n), &s.g)?;
    }
    out.field("final_f.hmf", &traj.final_state.f)?;
    Ok(())
}

fn build_eta(cfg: &Config) -> Result<Arc<StationaryState>, CliError> {
    Ok(Arc::new(cfg.eta_spec()?.build(cfg.grid()?)?))
}

pub fn cmd_penrose(cfg: &Config, out: &mut Output) -> Result<(), CliError> {
    let eta = build_eta(cfg)?;
    let rep = penrose_check(&eta, cfg.real("analysis.kappa0"))?;
    let mut csv = Csv::new(&["tau", "re", "im", "modulus"]);
    for s in rep.samples.iter().filter(|s| s.n == 1) {
        csv.row(&[num(s.tau), num(s.value.re), num(s.value.im), num(s.value.norm())]);
    }
    out.csv("penrose_report.csv", csv)?;
    let mut summary = vec![
        ("kappa", num(rep.kappa)),
        ("kappa_tau", num(rep.kappa_tau)),
        ("kappa_n", rep.kappa_n.to_string()),
        ("zero_count", rep.zero_count.to_string()),
        ("threshold", num(rep.threshold)),
        ("pass", flag(rep.pass)),
    ];
    let windings: Vec<String> = rep
        .per_mode
        .iter()
        .map(|(n, z, w)| format!("n={n}:zeros={z}:winding={}", num(*w)))
        .collect();
    summary.push(("modes", windings.join(" ")));
    match landau_root(&eta) {
        Ok(root) => {
            summary.push(("root_re", num(root.tau.re)));
            summary.push(("root_im", num(root.tau.im)));
            summary.push(("decay_rate", num(root.decay_rate())));
            summary.push(("frequency", num(root.frequency())));
            summary.push(("root_residual", num(root.residual)));
        }
        Err(e) => {
            log::warn!("landau root: {e}");
            summary.push(("root_error", e.to_string()));
        }
    }
    out.summary("penrose_summary.txt", &summary)?;
    println!(
        "penrose: kappa = {:.6}, zero_count = {}, pass = {}",
        rep.kappa, rep.zero_count, rep.pass
    );
    Ok(())
}

fn ladder_specs(cfg: &Config, final_time: f64) -> Result<Vec<LadderSpec>, CliError> {
    let base = cfg.run_config()?;
    let norm = WeightedNormSpec::new(cfg.int("analysis.r") as u32, cfg.nu())?;
    let specs = cfg
        .variants()
        .into_iter()
        .map(|v| LadderSpec {
            error_norm: norm,
            reference_h: cfg.auto_real("analysis.reference_h"),
            growth_horizons: cfg.reals("analysis.checkpoints").to_vec(),
            ..LadderSpec::new(base.clone(), v, cfg.reals("analysis.ladder").to_vec(), final_time)
        })
        .collect::<Vec<_>>();
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}

fn push_order(study: &str, reps: &[OrderReport], rows: &mut Csv, summary: &mut Csv) {
    for r in reps {
        for (h, e) in r.h_values.iter().zip(&r.errors) {
            rows.row(&[study.into(), r.variant.name().into(), num(*h), num(*e)]);
        }
        summary.row(&[
            study.into(),
            r.variant.name().into(),
            opt(r.slope),
            opt(r.r_squared),
            flag(r.inconclusive),
            r.reference.clone(),
        ]);
        println!(
            "{study} {}: slope = {}, inconclusive = {}",
            r.variant.name(),
            r.slope.map_or("n/a".into(), |s| format!("{s:.4}")),
            r.inconclusive
        );
    }
}

pub fn cmd_converge(cfg: &Config, out: &mut Output) -> Result<(), CliError> {
    let studies = cfg.studies();
    let wants = |s: &str| studies.iter().any(|w| w == s);
    let order_specs = ladder_specs(cfg, cfg.real("analysis.ladder_T"))?;
    let limit_specs = ladder_specs(cfg, cfg.real("analysis.limit_T"))?;
    let mut rows = Csv::new(&["study", "variant", "h", "error"]);
    let mut summary = Csv::new(&["study", "variant", "slope", "r_squared", "inconclusive", "reference"]);
    if wants("order") {
        push_order("order", &order_suite(&order_specs)?, &mut rows, &mut summary);
    }
    if wants("limit") {
        push_order("limit", &limit_state_suite(&limit_specs)?, &mut rows, &mut summary);
    }
    out.csv("order_report.csv", rows)?;
    out.csv("order_summary.csv", summary)?;
    if wants("growth") {
        let sigma = cfg.int("analysis.growth_sigma") as u32;
        let mut rows = Csv::new(&["variant", "h", "T", "sup_error"]);
        let mut summary = Csv::new(&["variant", "sigma", "h", "exponent", "ratio"]);
        for spec in &limit_specs {
            let rep = growth_study(spec, sigma)?;
            for r in &rep.rows {
                for (t, e) in rep.horizons.iter().zip(&r.sup_errors) {
                    rows.row(&[rep.variant.name().into(), num(r.h), num(*t), num(*e)]);
                }
                summary.row(&[
                    rep.variant.name().into(),
                    sigma.to_string(),
                    num(r.h),
                    opt(r.exponent),
                    opt(r.ratio),
                ]);
            }
        }
        out.csv("growth_report.csv", rows)?;
        out.csv("growth_summary.csv", summary)?;
    }
    Ok(())
}

pub fn cmd_volterra(cfg: &Config, out: &mut Output) -> Result<(), CliError> {
    let rc = cfg.run_config()?;
    let eta = Arc::new(rc.eta.build(rc.grid)?);
    let r0 = rc.perturbation.build(&eta)?;
    let horizon = cfg.real("analysis.volterra_T");
    let dt = cfg.real("analysis.volterra_dt");
    let forcing = |t: f64| fourier_coefficient(&r0, 1, t).expect("mode 1 resolved");
    let problem =
        VolterraProblem::hmf(eta.clone(), forcing, horizon, dt).with_kappa0(cfg.real("analysis.kappa0"));
    let time = solve_time_domain(&problem)?;
    let freq = solve_fourier_domain(&problem)?;
    let mut csv = Csv::new(&["method", "t", "re", "im", "abs"]);
    for sol in [&time, &freq] {
        for (t, y) in sol.times.iter().zip(&sol.values) {
            csv.row(&[sol.method.into(), num(*t), num(y.re), num(y.im), num(y.norm())]);
        }
    }
    out.csv("volterra_report.csv", csv)?;
    let pred = linear_prediction(&eta, &r0, &SchemeSpec::new(cfg.variant(), cfg.real("scheme.h"))?, horizon)?;
    let mut csv = Csv::new(&["t", "s", "re", "im", "abs"]);
    for ((t, s), z) in pred.times.iter().zip(&pred.s_times).zip(&pred.z) {
        csv.row(&[num(*t), num(*s), num(z.re), num(z.im), num(z.norm())]);
    }
    out.csv("prediction.csv", csv)?;
    let distance = time.sup_distance(&freq);
    out.summary(
        "volterra_summary.txt",
        &[
            ("dt", num(dt)),
            ("horizon", num(horizon)),
            ("methods", format!("{}, {}", time.method, freq.method)),
            ("sup_distance", num(distance)),
            ("causality_residual", opt(freq.causality_residual)),
        ],
    )?;
    println!("volterra: sup distance = {distance:.3e}");
    Ok(())
}

/// Reads `t` and `ζ₁` columns from a series file written by `run`.
pub fn read_series(path: &std::path::Path) -> Result<(Vec<f64>, Vec<Complex64>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| CliError::Input(format!("{}: empty file", path.display())))?
        .split(',')
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::Input(format!("{}: no column {name}", path.display())))
    };
    let (it, ire, iim) = (col("t")?, col("re_zeta_p1")?, col("im_zeta_p1")?);
    let mut t = Vec::new();
    let mut z = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let get = |c: usize| -> Result<f64, CliError> {
            fields
                .get(c)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CliError::Input(format!("{}: line {}: bad field {c}", path.display(), i + 2)))
        };
        t.push(get(it)?);
        z.push(Complex64::new(get(ire)?, get(iim)?));
    }
    Ok((t, z))
}

pub fn cmd_dampfit(cfg: &Config, out: &mut Output) -> Result<(), CliError> {
    let path = match cfg.text("analysis.series") {
        "" => cfg.output_dir().join("series.csv"),
        p => PathBuf::from(p),
    };
    let (t, z) = read_series(&path)?;
    let window = cfg.fit_window();
    let fit = fit_damping(&t, &z, window, cfg.fit_model())?;
    let mut csv = Csv::new(&["window_start", "window_end", "model", "rate", "frequency", "r_squared", "points"]);
    csv.row(&[
        num(window.0),
        num(window.1),
        fit.model.name().into(),
        num(fit.rate),
        num(fit.frequency),
        num(fit.r_squared),
        fit.points.to_string(),
    ]);
    out.csv("damping_report.csv", csv)?;
    println!(
        "dampfit: {} rate = {:.6}, frequency = {:.6}, r^2 = {:.6}",
        fit.model.name(),
        fit.rate,
        fit.frequency,
        fit.r_squared
    );
    Ok(())
}

pub fn cmd_scatter(cfg: &Config, out: &mut Output) -> Result<(), CliError> {
    let mut rc = cfg.run_config()?;
    rc.snapshot_times = cfg.reals("analysis.checkpoints").to_vec();
    let traj = run(&rc)?;
    let r = cfg.int("analysis.r") as u32;
    let nu = cfg.nu();
    let rep = scattering_limit(&traj, r, nu)?;
    let mut csv = Csv::new(&["t", "error", "fitted_exponent"]);
    for (t, e) in &rep.cauchy_errors {
        csv.row(&[num(*t), num(*e), opt(rep.fitted_decay_exponent)]);
    }
    out.csv("scatter_report.csv", csv)?;
    let mut csv = Csv::new(&["t", "residual"]);
    for (t, e) in &rep.weak_residuals {
        csv.row(&[num(*t), num(*e)]);
    }
    out.csv("weak_residual.csv", csv)?;
    let grid = traj.grid();
    let mut csv = Csv::new(&["v", "eta", "eta_inf"]);
    for (j, (e, ei)) in traj.eta.profile().iter().zip(&rep.eta_inf).enumerate() {
        csv.row(&[num(grid.v(j)), num(*e), num(*ei)]);
    }
    out.csv("eta_inf.csv", csv)?;
    let ns = weighted_norm_series(&traj, cfg.analysis_s(), nu)?;
    let mut csv = Csv::new(&["t", "N", "M", "Q"]);
    for i in 0..ns.times.len() {
        csv.row(&[num(ns.times[i]), num(ns.n[i]), num(ns.m[i]), num(ns.q[i])]);
    }
    out.csv("weighted_norms.csv", csv)?;
    out.field("g_inf.hmf", &rep.g_inf)?;
    Ok(())
}
