//! Linear Volterra equations `y(t) = ∫_0^t K(t - σ) y(σ) dσ + F(t)`: a
//! product-trapezoid time stepper, a Fourier-domain solver and the linear
//! prediction of the density mode for a splitting scheme.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dynamics::{SchemeSpec, StationaryState};
use crate::error::{Error, Result};
use crate::penrose::{kernel_k, khat1, KernelSpec};
use crate::spectral::{fourier_coefficient, MixedField};

type RealFn<'a> = Box<dyn Fn(f64) -> Complex64 + Sync + 'a>;

pub struct VolterraProblem<'a> {
    pub kernel: RealFn<'a>,
    /// `K̂(τ) = ∫_0^∞ e^{-iτt} K(t) dt` on the real axis; needed by the
    /// Fourier-domain solver.
    pub kernel_hat: Option<Box<dyn Fn(f64) -> Result<Complex64> + Sync + 'a>>,
    pub forcing: RealFn<'a>,
    pub horizon: f64,
    pub dt: f64,
    /// Smallest admissible `|1 - K̂|` on the transform grid.
    pub kappa0: f64,
}

impl<'a> VolterraProblem<'a> {
    pub fn new(
        kernel: impl Fn(f64) -> Complex64 + Sync + 'a,
        forcing: impl Fn(f64) -> Complex64 + Sync + 'a,
        horizon: f64,
        dt: f64,
    ) -> Self {
        VolterraProblem {
            kernel: Box::new(kernel),
            kernel_hat: None,
            forcing: Box::new(forcing),
            horizon,
            dt,
            kappa0: 0.0,
        }
    }

    pub fn with_kernel_hat(mut self, hat: impl Fn(f64) -> Result<Complex64> + Sync + 'a) -> Self {
        self.kernel_hat = Some(Box::new(hat));
        self
    }

    pub fn with_kappa0(mut self, kappa0: f64) -> Self {
        self.kappa0 = kappa0;
        self
    }

    /// Kernel `K(1, ·)` of a stationary profile, with its transform.
    pub fn hmf(eta: Arc<StationaryState>, forcing: impl Fn(f64) -> Complex64 + Sync + 'a, horizon: f64, dt: f64) -> Self {
        let spec = KernelSpec::new(1, eta);
        let hat_spec = spec.clone();
        VolterraProblem::new(move |t| kernel_k(&spec, t), forcing, horizon, dt)
            .with_kernel_hat(move |tau| khat1(&hat_spec, Complex64::new(tau, 0.0)))
    }

    fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::param("dt", format!("{} must be positive", self.dt)));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(Error::param("T", format!("{} must be >= 0", self.horizon)));
        }
        let n = (self.horizon / self.dt).round();
        if (n * self.dt - self.horizon).abs() > 1e-9 * self.horizon.max(1.0) {
            return Err(Error::param(
                "dt",
                format!("{} does not divide T = {}", self.dt, self.horizon),
            ));
        }
        Ok(n as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolterraSolution {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    pub method: &'static str,
    pub dt: f64,
    /// Largest `|y|` returned on the negative half of the padded time axis.
    pub causality_residual: Option<f64>,
}

impl VolterraSolution {
    pub fn sup_distance(&self, other: &VolterraSolution) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Product trapezoid rule: `y_0 = F_0` and
/// `y_n (1 - Δt K_0/2) = F_n + Δt (K_n y_0/2 + Σ_{m=1}^{n-1} K_{n-m} y_m)`.
pub fn solve_time_domain(p: &VolterraProblem) -> Result<VolterraSolution> {
    let n = p.steps()?;
    let dt = p.dt;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
    let k: Vec<Complex64> = times.iter().map(|&t| (p.kernel)(t)).collect();
    let diag = Complex64::new(1.0, 0.0) - 0.5 * dt * k[0];
    if diag.norm() < 1e-12 {
        return Err(Error::IllPosed(diag.norm()));
    }
    let mut y = Vec::with_capacity(n + 1);
    y.push((p.forcing)(0.0));
    for i in 1..=n {
        let mut acc = 0.5 * k[i] * y[0];
        for m in 1..i {
            acc += k[i - m] * y[m];
        }
        y.push(((p.forcing)(times[i]) + dt * acc) / diag);
    }
    Ok(VolterraSolution {
        times,
        values: y,
        method: "time_domain",
        dt,
        causality_residual: None,
    })
}

/// `ŷ = F̂ / (1 - K̂)` on a zero-padded periodic grid of at least four times
/// the horizon.
pub fn solve_fourier_domain(p: &VolterraProblem) -> Result<VolterraSolution> {
    let hat = p.kernel_hat.as_ref().ok_or(Error::MissingTransform)?;
    let n = p.steps()?;
    let dt = p.dt;
    let len = (4 * (n + 1)).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (i, b) in buf.iter_mut().enumerate().take(n + 1) {
        *b = (p.forcing)(i as f64 * dt);
    }
    // the padded forcing jumps at t = 0 and t = T; sample the mean there
    buf[0] *= 0.5;
    buf[n] *= 0.5;
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    let omega = 2.0 * PI / (len as f64 * dt);
    let denominators: Vec<Result<Complex64>> = {
        use rayon::prelude::*;
        (0..len)
            .into_par_iter()
            .map(|q| {
                let signed = if q < len / 2 { q as f64 } else { q as f64 - len as f64 };
                let tau = signed * omega;
                let d = Complex64::new(1.0, 0.0) - hat(tau)?;
                if d.norm() < p.kappa0 {
                    return Err(Error::PenroseViolation {
                        tau,
                        modulus: d.norm(),
                        kappa0: p.kappa0,
                    });
                }
                Ok(d)
            })
            .collect()
    };
    for (b, d) in buf.iter_mut().zip(denominators) {
        *b /= d?;
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    for b in &mut buf {
        *b /= len as f64;
    }
    let causality_residual = buf[len / 2 + 1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut values: Vec<Complex64> = buf[..=n].to_vec();
    // undo the jump averaging: y(0+) = 2·mean, y(T) = mean + F(T)/2
    if n == 0 {
        values[0] = (p.forcing)(0.0);
    } else {
        values[0] *= 2.0;
        values[n] += 0.5 * (p.forcing)(n as f64 * dt);
    }
    Ok(VolterraSolution {
        times: (0..=n).map(|i| i as f64 * dt).collect(),
        values,
        method: "fourier_domain",
        dt,
        causality_residual: Some(causality_residual),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearPrediction {
    /// Step times `nh`.
    pub times: Vec<f64>,
    /// Values of the shift function at the step times.
    pub s_times: Vec<f64>,
    /// Linear prediction of `Z_1(nh)`.
    pub z: Vec<Complex64>,
}

/// Linear response of `Z_1` for the scheme: on every piece where `s_h` is
/// constant the unknown is constant too, and
/// `Z_m = ĝ⁰_1(s_m) + Σ_{j<m} |I_j| K(1, s_m - s_j) Z_j` holds exactly.
pub fn linear_prediction(
    eta: &Arc<StationaryState>,
    g0: &MixedField,
    scheme: &SchemeSpec,
    horizon: f64,
) -> Result<LinearPrediction> {
    if g0.grid() != eta.grid() {
        return Err(Error::param("g0", "grid differs from the stationary state grid"));
    }
    let steps = scheme.steps_to(horizon)?;
    let spec = KernelSpec::new(1, eta.clone());
    let segments = scheme.variant.shift_segments();
    let mut s_vals = Vec::new();
    let mut widths = Vec::new();
    let mut first_of_step = Vec::with_capacity(steps as usize + 1);
    for n in 0..=steps {
        first_of_step.push(s_vals.len());
        for &(a, b, off) in segments {
            s_vals.push((n as f64 + off) * scheme.h);
            widths.push((b - a) * scheme.h);
        }
    }
    let mut z: Vec<Complex64> = Vec::with_capacity(s_vals.len());
    for m in 0..s_vals.len() {
        let mut acc = fourier_coefficient(g0, 1, s_vals[m])?;
        for j in 0..m {
            acc += widths[j] * kernel_k(&spec, s_vals[m] - s_vals[j]) * z[j];
        }
        z.push(acc);
    }
    Ok(LinearPrediction {
        times: (0..=steps).map(|n| n as f64 * scheme.h).collect(),
        s_times: first_of_step.iter().map(|&i| s_vals[i]).collect(),
        z: first_of_step.iter().map(|&i| z[i]).collect(),
    })
}

/// Linear response with the continuous argument `s(t) = t`, solved by the
/// product trapezoid rule with step `dt`.
pub fn linear_prediction_continuous(
    eta: &Arc<StationaryState>,
    g0: &MixedField,
    horizon: f64,
    dt: f64,
) -> Result<VolterraSolution> {
    if g0.grid() != eta.grid() {
        return Err(Error::param("g0", "grid differs from the stationary state grid"));
    }
    let spec = KernelSpec::new(1, eta.clone());
    let forcing = |t: f64| fourier_coefficient(g0, 1, t).expect("mode 1 resolved");
    let p = VolterraProblem::new(|t| kernel_k(&spec, t), forcing, horizon, dt);
    solve_time_domain(&p)
}
