//! Post-processing of trajectories: density-mode series, damping fits, the
//! weighted norms `N`, `M`, `Q`, scattering limits and weak limits.

use num_complex::Complex64;

use crate::dynamics::{StationaryState, Trajectory};
use crate::error::{Error, Result};
use crate::numerics::{japanese, linear_fit};
use crate::spectral::{fourier_coefficient, sobolev_norm, MixedField, WeightedNormSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSeries {
    pub times: Vec<f64>,
    pub s_times: Vec<f64>,
    pub zeta_p1: Vec<Complex64>,
    pub zeta_m1: Vec<Complex64>,
    pub z_p1: Vec<Complex64>,
    pub z_m1: Vec<Complex64>,
    pub norms: Vec<(WeightedNormSpec, Vec<f64>)>,
}

pub fn extract_modes(traj: &Trajectory) -> Result<ModeSeries> {
    if traj.records.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let col = |f: &dyn Fn(&crate::dynamics::StepRecord) -> Complex64| -> Vec<Complex64> {
        traj.records.iter().map(f).collect()
    };
    let norms = traj
        .norm_specs
        .iter()
        .enumerate()
        .map(|(i, &sp)| (sp, traj.records.iter().map(|r| r.norms[i]).collect()))
        .collect();
    Ok(ModeSeries {
        times: traj.records.iter().map(|r| r.t).collect(),
        s_times: traj.records.iter().map(|r| r.s).collect(),
        zeta_p1: col(&|r| r.zeta_p1),
        zeta_m1: col(&|r| r.zeta_m1),
        z_p1: col(&|r| r.z_p1),
        z_m1: col(&|r| r.z_m1),
        norms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DampingModel {
    /// `|ζ| ~ e^{-γt}` through the envelope of local maxima.
    Exponential,
    /// `|ζ| ~ ⟨t⟩^p` by least squares on every sample.
    Algebraic,
}

impl DampingModel {
    pub fn name(self) -> &'static str {
        match self {
            DampingModel::Exponential => "exponential",
            DampingModel::Algebraic => "algebraic",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "exponential" => Ok(DampingModel::Exponential),
            "algebraic" => Ok(DampingModel::Algebraic),
            other => Err(Error::param(
                "analysis.fit_model",
                format!("unknown model `{other}` (exponential, algebraic)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DampingFit {
    pub model: DampingModel,
    pub window: (f64, f64),
    /// Decay rate `γ` (exponential) or exponent `p` (algebraic).
    pub rate: f64,
    /// Oscillation frequency; zero when no oscillation is visible.
    pub frequency: f64,
    pub r_squared: f64,
    /// Envelope maxima (exponential) or samples (algebraic) used.
    pub points: usize,
}

/// Minimum number of envelope maxima or samples for a fit.
pub const MIN_FIT_POINTS: usize = 10;

/// Fits the decay of a complex mode series over `window`.
pub fn fit_damping(
    times: &[f64],
    values: &[Complex64],
    window: (f64, f64),
    model: DampingModel,
) -> Result<DampingFit> {
    if times.len() != values.len() {
        return Err(Error::param("values", "length differs from times"));
    }
    if !(window.1 > window.0) {
        return Err(Error::param(
            "analysis.fit_window",
            format!("empty window [{}, {}]", window.0, window.1),
        ));
    }
    let idx: Vec<usize> = (0..times.len())
        .filter(|&i| times[i] >= window.0 && times[i] <= window.1)
        .collect();
    let t: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
    let a: Vec<f64> = idx.iter().map(|&i| values[i].norm()).collect();
    let re: Vec<f64> = idx.iter().map(|&i| values[i].re).collect();
    match model {
        DampingModel::Exponential => {
            let peaks: Vec<usize> = (1..t.len().saturating_sub(1))
                .filter(|&i| a[i] >= a[i - 1] && a[i] >= a[i + 1])
                .collect();
            if peaks.len() < MIN_FIT_POINTS {
                return Err(Error::InsufficientData(format!(
                    "{} envelope maxima in window, need {MIN_FIT_POINTS}",
                    peaks.len()
                )));
            }
            let mut xs = Vec::with_capacity(peaks.len());
            let mut ys = Vec::with_capacity(peaks.len());
            for &i in &peaks {
                if !(a[i] > 0.0) {
                    return Err(Error::NonPositive { t: t[i], value: a[i] });
                }
                xs.push(t[i]);
                ys.push(a[i].ln());
            }
            let fit = linear_fit(&xs, &ys)?;
            let frequency = crossing_frequency(&t, &re).unwrap_or_else(|| {
                // a nonnegative signal such as |cos ωt| peaks every π/ω
                let span = xs[xs.len() - 1] - xs[0];
                if is_oscillating(&t, &a) && span > 0.0 {
                    std::f64::consts::PI * (xs.len() - 1) as f64 / span
                } else {
                    0.0
                }
            });
            Ok(DampingFit {
                model,
                window,
                rate: -fit.slope,
                frequency,
                r_squared: fit.r_squared,
                points: peaks.len(),
            })
        }
        DampingModel::Algebraic => {
            if t.len() < MIN_FIT_POINTS {
                return Err(Error::InsufficientData(format!(
                    "{} samples in window, need {MIN_FIT_POINTS}",
                    t.len()
                )));
            }
            let mut xs = Vec::with_capacity(t.len());
            let mut ys = Vec::with_capacity(t.len());
            for (&ti, &ai) in t.iter().zip(&a) {
                if !(ai > 0.0) {
                    return Err(Error::NonPositive { t: ti, value: ai });
                }
                xs.push(japanese(ti).ln());
                ys.push(ai.ln());
            }
            let fit = linear_fit(&xs, &ys)?;
            Ok(DampingFit {
                model,
                window,
                rate: fit.slope,
                frequency: crossing_frequency(&t, &re).unwrap_or(0.0),
                r_squared: fit.r_squared,
                points: t.len(),
            })
        }
    }
}

pub fn fit_damping_series(series: &ModeSeries, window: (f64, f64), model: DampingModel) -> Result<DampingFit> {
    fit_damping(&series.times, &series.zeta_p1, window, model)
}

/// `ω = π (crossings - 1) / (last - first)` from linearly interpolated sign
/// changes; `None` with fewer than two crossings.
fn crossing_frequency(t: &[f64], y: &[f64]) -> Option<f64> {
    let mut crossings = Vec::new();
    for i in 1..y.len() {
        let (a, b) = (y[i - 1], y[i]);
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            if b == 0.0 {
                // counted at the next sign change instead of twice
                continue;
            }
            crossings.push(t[i - 1] + (t[i] - t[i - 1]) * a / (a - b));
        }
    }
    if crossings.len() < 2 {
        return None;
    }
    let span = crossings[crossings.len() - 1] - crossings[0];
    (span > 0.0).then(|| std::f64::consts::PI * (crossings.len() - 1) as f64 / span)
}

/// True when the series has strict interior minima, i.e. it is not monotone
/// or constant.
fn is_oscillating(t: &[f64], a: &[f64]) -> bool {
    let _ = t;
    (1..a.len().saturating_sub(1)).any(|i| a[i] < a[i - 1] && a[i] < a[i + 1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormSeries {
    pub times: Vec<f64>,
    /// `N(T) = sup_{t ≤ T} ‖g(t)‖_{H^s_ν} / ⟨t⟩³`
    pub n: Vec<f64>,
    /// `M(T) = sup_{t ≤ T} max_{k=±1} ⟨t⟩^{s-1} |Z_k(t)|`
    pub m: Vec<f64>,
    /// `Q(T) = N(T) + M(T) + sup_{t ≤ T} ‖g(t)‖_{H^{s-4}_ν}`
    pub q: Vec<f64>,
}

impl NormSeries {
    /// `Q` at the last recorded time not after `t`.
    pub fn q_at(&self, t: f64) -> Option<f64> {
        let i = self.times.iter().rposition(|&ti| ti <= t + 1e-9)?;
        Some(self.q[i])
    }
}

fn recorded_norm(traj: &Trajectory, s: u32, nu: f64) -> Result<usize> {
    traj.norm_specs
        .iter()
        .position(|sp| sp.s == s && sp.nu == nu)
        .ok_or(Error::MissingNorm { s, nu })
}

/// Running suprema of the weighted norms over the recorded steps.
pub fn weighted_norm_series(traj: &Trajectory, s: u32, nu: f64) -> Result<NormSeries> {
    if s < 4 {
        return Err(Error::param("s", format!("need s >= 4 for the H^(s-4) part, got {s}")));
    }
    if traj.records.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let hi = recorded_norm(traj, s, nu)?;
    let lo = recorded_norm(traj, s - 4, nu)?;
    let gamma = s as i32 - 1;
    let mut out = NormSeries {
        times: Vec::with_capacity(traj.records.len()),
        n: Vec::with_capacity(traj.records.len()),
        m: Vec::with_capacity(traj.records.len()),
        q: Vec::with_capacity(traj.records.len()),
    };
    let (mut n_sup, mut m_sup, mut low_sup) = (0.0f64, 0.0f64, 0.0f64);
    for rec in &traj.records {
        let w = japanese(rec.t);
        n_sup = n_sup.max(rec.norms[hi] / w.powi(3));
        m_sup = m_sup.max(w.powi(gamma) * rec.z_p1.norm().max(rec.z_m1.norm()));
        low_sup = low_sup.max(rec.norms[lo]);
        out.times.push(rec.t);
        out.n.push(n_sup);
        out.m.push(m_sup);
        out.q.push(n_sup + m_sup + low_sup);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterReport {
    pub g_inf: MixedField,
    pub checkpoints: Vec<f64>,
    /// `(t_i, ‖g(t_i) - g(t_{i+1})‖_{H^r_ν})` for successive checkpoints.
    pub cauchy_errors: Vec<(f64, f64)>,
    /// Slope of `log error` against `log t`; `None` if an error vanishes.
    pub fitted_decay_exponent: Option<f64>,
    pub eta_inf: Vec<f64>,
    /// `(t_i, |f̂₀(t_i, ξ) - η̂_h^∞(ξ)|)` at [`ScatterReport::xi`].
    pub weak_residuals: Vec<(f64, f64)>,
    pub xi: f64,
}

/// Frequency at which the weak-convergence residual is reported.
pub const WEAK_RESIDUAL_XI: f64 = 1.0;

/// Scattering limit from the trajectory's snapshots, taken as checkpoints.
pub fn scattering_limit(traj: &Trajectory, r: u32, nu: f64) -> Result<ScatterReport> {
    let spec = WeightedNormSpec::new(r, nu)?;
    let snaps = &traj.snapshots;
    if snaps.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} checkpoints, need at least 3",
            snaps.len()
        )));
    }
    let g_inf = snaps[snaps.len() - 1].g.clone();
    let cauchy_errors: Vec<(f64, f64)> = snaps
        .windows(2)
        .map(|w| (w[0].t, sobolev_norm(&w[0].g.difference(&w[1].g), spec)))
        .collect();
    let fitted_decay_exponent = if cauchy_errors.iter().all(|&(t, e)| e > 0.0 && t > 0.0) {
        let xs: Vec<f64> = cauchy_errors.iter().map(|&(t, _)| t.ln()).collect();
        let ys: Vec<f64> = cauchy_errors.iter().map(|&(_, e)| e.ln()).collect();
        Some(linear_fit(&xs, &ys)?.slope)
    } else {
        None
    };
    let eta_inf = weak_limit_eta(&g_inf, traj.epsilon, &traj.eta);
    let xi = WEAK_RESIDUAL_XI;
    let eta_inf_hat = profile_transform(&g_inf, &eta_inf, xi);
    let weak_residuals = snaps
        .iter()
        .map(|s| {
            let mut f0 = traj.eta.to_field();
            f0.add_scaled(traj.epsilon, &s.g);
            let fhat = fourier_coefficient(&f0, 0, xi).expect("mode 0 resolved");
            (s.t, (fhat - eta_inf_hat).norm())
        })
        .collect();
    Ok(ScatterReport {
        g_inf,
        checkpoints: snaps.iter().map(|s| s.t).collect(),
        cauchy_errors,
        fitted_decay_exponent,
        eta_inf,
        weak_residuals,
        xi,
    })
}

fn profile_transform(like: &MixedField, profile: &[f64], xi: f64) -> Complex64 {
    let g = like.grid();
    profile
        .iter()
        .enumerate()
        .map(|(j, &p)| p * Complex64::cis(-xi * g.v(j)))
        .sum::<Complex64>()
        * g.dv()
}

/// `η_h^∞(v_j) = η(v_j) + ε ĝ^∞_0(v_j)`, the x-average of the limit.
pub fn weak_limit_eta(g_inf: &MixedField, epsilon: f64, eta: &StationaryState) -> Vec<f64> {
    eta.profile()
        .iter()
        .zip(g_inf.row(0))
        .map(|(&e, c)| e + epsilon * c.re)
        .collect()
}

/// `|f̂₀(ξ) - η̂_h^∞(ξ)|` for a distribution `f` and a sampled profile.
pub fn weak_limit_residual(f: &MixedField, eta_inf: &[f64], xi: f64) -> f64 {
    let fhat = fourier_coefficient(f, 0, xi).expect("mode 0 resolved");
    (fhat - profile_transform(f, eta_inf, xi)).norm()
}
