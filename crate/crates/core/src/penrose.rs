//! The memory kernel `K(n, t) = -n² p_n t η̂₀(nt)`, its half-line transform
//! `K̂₁(n, τ) = ∫_0^∞ e^{-iτt} K(n, t) dt`, the Penrose stability check and
//! Landau-root finding.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::StationaryState;
use crate::error::{Error, Result};
use crate::numerics::Integrator;

/// `|τ|` beyond which `K̂₁` is evaluated from its large-`τ` expansion.
pub const ASYMPTOTIC_RADIUS: f64 = 40.0;

/// `p_k`, the Fourier coefficients of the interaction `cos x`.
pub fn p_n(n: i64) -> f64 {
    if n.abs() == 1 {
        0.5
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub n: i64,
    pub eta: Arc<StationaryState>,
}

impl KernelSpec {
    pub fn new(n: i64, eta: Arc<StationaryState>) -> Self {
        KernelSpec { n, eta }
    }

    fn prefactor(&self) -> f64 {
        -((self.n * self.n) as f64) * p_n(self.n)
    }

    pub fn is_zero(&self) -> bool {
        self.prefactor() == 0.0
    }

    /// `K(n, t)` at a complex argument (real for even profiles and real t).
    pub fn eval(&self, t: Complex64) -> Complex64 {
        let c = self.prefactor();
        if c == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        c * t * self.eta.eta_hat(t * self.n as f64)
    }

    /// Length after which `|K(t)| e^{a t}` is negligible, `a ≥ 0`.
    fn horizon(&self, growth: f64) -> f64 {
        let n = self.n.unsigned_abs() as f64;
        match self.eta.components() {
            Some(comps) => {
                let t_min = comps
                    .iter()
                    .map(|c| c.temperature)
                    .fold(f64::INFINITY, f64::min)
                    * n
                    * n;
                (growth + (growth * growth + 80.0 * t_min).sqrt()) / t_min
            }
            // the grid transform is periodic in ξ with period 2π/Δv
            None => PI / self.eta.grid().dv() / n,
        }
    }
}

/// `K(n, t) = -n² p_n t η̂₀(nt)` for real `t ≥ 0`.
pub fn kernel_k(spec: &KernelSpec, t: f64) -> Complex64 {
    spec.eval(Complex64::new(t, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub degree: usize,
    /// Multiplies the panel width bound `min(1, π/(|Re τ| + 1))`.
    pub panel_scale: f64,
    pub rel_tol: f64,
    /// Relative level below which the kernel tail is cut.
    pub tail_tol: f64,
    pub asymptotic_radius: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            degree: 16,
            panel_scale: 1.0,
            rel_tol: 1e-12,
            tail_tol: 1e-14,
            asymptotic_radius: ASYMPTOTIC_RADIUS,
        }
    }
}

/// `K̂₁(n, τ)` for `Im τ ≤ 0`.
pub fn khat1(spec: &KernelSpec, tau: Complex64) -> Result<Complex64> {
    khat1_with(spec, tau, &QuadratureOptions::default())
}

pub fn khat1_with(spec: &KernelSpec, tau: Complex64, opts: &QuadratureOptions) -> Result<Complex64> {
    if tau.im > 0.0 {
        return Err(Error::UpperHalfPlane(tau.im));
    }
    if spec.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if tau.norm() >= opts.asymptotic_radius {
        if let Some(v) = khat1_asymptotic(spec, tau) {
            return Ok(v);
        }
    }
    khat1_quadrature(spec, tau, opts)
}

/// Quadrature of the half-line transform, also for `Im τ > 0` (continuation
/// through the real axis; the Gaussian decay of `K` must dominate).
pub(crate) fn khat1_quadrature(
    spec: &KernelSpec,
    tau: Complex64,
    opts: &QuadratureOptions,
) -> Result<Complex64> {
    let growth = tau.im.max(0.0);
    let horizon = spec.horizon(growth);
    let weight = |t: f64| kernel_k(spec, t).norm() * (tau.im * t).exp();
    let dt = 0.02;
    let steps = (horizon / dt).ceil() as usize;
    let mut peak: f64 = 0.0;
    let samples: Vec<f64> = (0..=steps).map(|i| weight(i as f64 * dt)).collect();
    for &w in &samples {
        peak = peak.max(w);
    }
    let last = samples
        .iter()
        .rposition(|&w| w > opts.tail_tol * peak)
        .unwrap_or(0);
    let t_cut = (((last + 2) as f64) * dt).min(horizon);
    let integrator = Integrator::new(opts.degree, opts.rel_tol, 1e-300);
    let max_panel = opts.panel_scale * (PI / (tau.re.abs() + 1.0)).min(1.0);
    let i_tau = Complex64::new(0.0, -1.0) * tau;
    integrator.integrate(|t| (i_tau * t).exp() * kernel_k(spec, t), 0.0, t_cut, max_panel)
}

/// `Σ_j K^{(j)}(0) / (iτ)^{j+1}` from integrating by parts, with
/// `K^{(j)}(0) = -n² p_n j n^{j-1} η̂₀^{(j-1)}(0)`. Returns `None` if the
/// terms stop decreasing before reaching round-off.
fn khat1_asymptotic(spec: &KernelSpec, tau: Complex64) -> Option<Complex64> {
    const MAX_TERMS: usize = 40;
    let derivs = spec.eta.eta_hat_derivatives_at_zero(MAX_TERMS);
    let c = spec.prefactor();
    let n = spec.n as f64;
    let inv = 1.0 / (Complex64::new(0.0, 1.0) * tau);
    let mut power = inv; // (iτ)^{-(j+1)} starting at j = 0
    let mut sum = Complex64::new(0.0, 0.0);
    // symmetric profiles make every other term vanish, so convergence and
    // divergence are judged on pairs of consecutive terms
    let mut prev = f64::INFINITY;
    let mut prev_pair = f64::INFINITY;
    for j in 1..=MAX_TERMS {
        power *= inv;
        let kj = c * j as f64 * n.powi(j as i32 - 1) * derivs[j - 1];
        let term = kj * power;
        let size = term.norm();
        sum += term;
        let pair = size.max(prev);
        if j > 1 && pair <= 1e-17 * sum.norm().max(1e-300) {
            return Some(sum);
        }
        if j > 4 && pair > prev_pair {
            return None;
        }
        if j % 2 == 0 {
            prev_pair = pair;
        }
        prev = size;
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenroseOptions {
    pub tau_max: f64,
    pub radius: f64,
    pub real_samples: usize,
    pub contour_samples: usize,
}

impl Default for PenroseOptions {
    fn default() -> Self {
        PenroseOptions {
            tau_max: 50.0,
            radius: 50.0,
            real_samples: 4097,
            contour_samples: 4096,
        }
    }
}

/// Default stability margin threshold `κ₀`.
pub const DEFAULT_KAPPA0: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenroseSample {
    pub n: i64,
    pub tau: f64,
    /// `1 - K̂₁(n, τ)`
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenroseReport {
    /// `min |1 - K̂₁(n, τ)|` over the real samples and `n = ±1`.
    pub kappa: f64,
    pub kappa_tau: f64,
    pub kappa_n: i64,
    /// Total number of zeros of `1 - K̂₁(n, ·)`, `n = ±1`, in the lower half-plane.
    pub zero_count: i64,
    /// `(n, zeros, raw winding number)`
    pub per_mode: Vec<(i64, i64, f64)>,
    pub threshold: f64,
    pub pass: bool,
    pub samples: Vec<PenroseSample>,
}

/// Why the real-axis minimum plus a zero count decides the condition.
pub const PENROSE_RATIONALE: &str = "1 - K1hat is holomorphic in Im tau < 0 and tends to 1 at infinity; \
without zeros there, its modulus attains its infimum over the closed lower half-plane on the real axis";

pub fn penrose_check(eta: &Arc<StationaryState>, kappa0: f64) -> Result<PenroseReport> {
    penrose_check_with(eta, kappa0, &PenroseOptions::default())
}

pub fn penrose_check_with(
    eta: &Arc<StationaryState>,
    kappa0: f64,
    opts: &PenroseOptions,
) -> Result<PenroseReport> {
    if !(kappa0 >= 0.0) {
        return Err(Error::param("kappa0", format!("{kappa0} must be >= 0")));
    }
    if opts.real_samples < 3 || opts.contour_samples < 3 || !(opts.tau_max > 0.0) || !(opts.radius > 0.0) {
        return Err(Error::param("penrose", "contour needs positive size and at least 3 samples"));
    }
    let quad = QuadratureOptions::default();
    let mut samples = Vec::new();
    let mut per_mode = Vec::new();
    let mut kappa = f64::INFINITY;
    let mut kappa_tau = 0.0;
    let mut kappa_n = 1;
    for n in [1i64, -1] {
        let spec = KernelSpec::new(n, eta.clone());
        let d = |tau: Complex64| khat1_with(&spec, tau, &quad).map(|k| Complex64::new(1.0, 0.0) - k);
        let m = opts.real_samples;
        let real: Vec<(f64, Complex64)> = (0..m)
            .into_par_iter()
            .map(|i| {
                let tau = -opts.tau_max + 2.0 * opts.tau_max * i as f64 / (m - 1) as f64;
                d(Complex64::new(tau, 0.0)).map(|v| (tau, v))
            })
            .collect::<Result<_>>()?;
        for &(tau, v) in &real {
            if v.norm() < kappa {
                kappa = v.norm();
                kappa_tau = tau;
                kappa_n = n;
            }
            samples.push(PenroseSample { n, tau, value: v });
        }
        // closed contour: the segment [-R, R], then the lower semicircle back
        // from R to -R through -iR (clockwise around the lower half-plane)
        let r = opts.radius;
        let k = opts.contour_samples;
        let segment: Vec<Complex64> = (0..k)
            .into_par_iter()
            .map(|i| d(Complex64::new(-r + 2.0 * r * i as f64 / k as f64, 0.0)))
            .collect::<Result<_>>()?;
        let arc: Vec<Complex64> = (0..k)
            .into_par_iter()
            .map(|i| d(Complex64::from_polar(r, -PI * i as f64 / k as f64)))
            .collect::<Result<_>>()?;
        let mut winding = 0.0;
        let closed = segment.iter().chain(&arc).chain(std::iter::once(&segment[0]));
        let mut prev: Option<&Complex64> = None;
        for z in closed {
            if let Some(p) = prev {
                winding += (z / p).arg();
            }
            prev = Some(z);
        }
        let winding = winding / (2.0 * PI);
        let rounded = winding.round();
        if (winding - rounded).abs() > 0.1 {
            return Err(Error::WindingNotInteger(winding));
        }
        per_mode.push((n, -(rounded as i64), winding));
    }
    let zero_count = per_mode.iter().map(|&(_, z, _)| z).sum();
    Ok(PenroseReport {
        kappa,
        kappa_tau,
        kappa_n,
        zero_count,
        per_mode,
        threshold: kappa0,
        pass: zero_count == 0 && kappa >= kappa0,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandauRoot {
    pub tau: Complex64,
    pub residual: f64,
    pub iterations: usize,
}

impl LandauRoot {
    /// `|ζ(t)| ~ e^{-rate t}`
    pub fn decay_rate(&self) -> f64 {
        self.tau.im
    }

    pub fn frequency(&self) -> f64 {
        self.tau.re.abs()
    }
}

/// Root of `1 - K̂₁(1, ·)` nearest the real axis, continued into `Im τ > 0`.
pub fn landau_root(eta: &Arc<StationaryState>) -> Result<LandauRoot> {
    landau_root_for(&KernelSpec::new(1, eta.clone()), None)
}

/// Complex secant iteration on `1 - K̂₁(n, ·)`. Without a guess, starts from
/// the best local minima of `|1 - K̂₁|` on a grid with `sign(n) Re τ > 0`.
pub fn landau_root_for(spec: &KernelSpec, guess: Option<Complex64>) -> Result<LandauRoot> {
    if spec.is_zero() {
        return Err(Error::NoRoot);
    }
    if !spec.eta.has_closed_form() {
        return Err(Error::param(
            "eta",
            "root finding continues K1hat past the real axis and needs a closed-form profile transform",
        ));
    }
    let opts = QuadratureOptions::default();
    let d = |tau: Complex64| -> Result<Complex64> {
        Ok(Complex64::new(1.0, 0.0) - khat1_quadrature(spec, tau, &opts)?)
    };
    let starts = match guess {
        Some(g) => vec![g],
        None => scan_starts(spec, &d)?,
    };
    let mut best: Option<LandauRoot> = None;
    let mut last_err = None;
    for start in starts {
        match secant(&d, start) {
            Ok(root) => {
                let better = best.map_or(true, |b| {
                    root.tau.im.abs() < b.tau.im.abs() - 1e-9
                });
                let duplicate = best.map_or(false, |b| (b.tau - root.tau).norm() < 1e-8);
                if better && !duplicate {
                    best = Some(root);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let root = match (best, last_err) {
        (Some(r), _) => r,
        (None, Some(e)) => return Err(e),
        (None, None) => return Err(Error::NoRoot),
    };
    if root.tau.im <= 0.0 {
        let report = penrose_check(&spec.eta, DEFAULT_KAPPA0)?;
        if report.pass {
            return Err(Error::InconsistentRoot {
                re: root.tau.re,
                im: root.tau.im,
            });
        }
    }
    Ok(root)
}

fn scan_starts<F>(spec: &KernelSpec, d: &F) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let sign = spec.n.signum() as f64;
    let (nr, ni) = (60usize, 40usize);
    let re = |i: usize| sign * (0.05 + 5.95 * i as f64 / (nr - 1) as f64);
    let im = |j: usize| 0.05 + 3.95 * j as f64 / (ni - 1) as f64;
    let values: Vec<f64> = (0..nr * ni)
        .into_par_iter()
        .map(|idx| d(Complex64::new(re(idx / ni), im(idx % ni))).map(|v| v.norm()))
        .collect::<Result<_>>()?;
    let at = |i: usize, j: usize| values[i * ni + j];
    let mut minima = Vec::new();
    for i in 0..nr {
        for j in 0..ni {
            let v = at(i, j);
            let mut is_min = true;
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                if a >= 0 && b >= 0 && (a as usize) < nr && (b as usize) < ni && at(a as usize, b as usize) < v {
                    is_min = false;
                }
            }
            if is_min {
                minima.push((v, Complex64::new(re(i), im(j))));
            }
        }
    }
    minima.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(minima.into_iter().take(5).map(|(_, z)| z).collect())
}

fn secant<F>(d: &F, start: Complex64) -> Result<LandauRoot>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    const MAX_ITER: usize = 100;
    let mut x0 = start;
    let mut x1 = start + Complex64::new(1e-3, 1e-3);
    let mut f0 = d(x0)?;
    let mut f1 = d(x1)?;
    for it in 1..=MAX_ITER {
        let denom = f1 - f0;
        if denom.norm() == 0.0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / denom;
        if !x2.re.is_finite() || !x2.im.is_finite() {
            break;
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = d(x1)?;
        if (x1 - x0).norm() <= 1e-13 * x1.norm().max(1.0) || f1.norm() < 1e-14 {
            return Ok(LandauRoot {
                tau: x1,
                residual: f1.norm(),
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITER,
        residual: f1.norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::GaussianComponent;
    use crate::spectral::PhaseGrid;

    fn grid() -> PhaseGrid {
        PhaseGrid::new(8, 256, 8.0).unwrap()
    }

    fn maxwellian(t: f64) -> Arc<StationaryState> {
        Arc::new(StationaryState::maxwellian(grid(), t).unwrap())
    }

    #[test]
    fn kernel_values() {
        let spec = KernelSpec::new(1, maxwellian(1.0));
        assert_eq!(kernel_k(&spec, 0.0), Complex64::new(0.0, 0.0));
        assert!((kernel_k(&spec, 1.0).re + 0.5 * (-0.5f64).exp()).abs() < 1e-15);
        let two = KernelSpec::new(2, maxwellian(1.0));
        assert_eq!(kernel_k(&two, 1.3), Complex64::new(0.0, 0.0));
        for i in 0..=1000 {
            let t = i as f64 * 0.1;
            let bound = kernel_k(&spec, t).norm() * (1.0 + t * t).powi(2);
            assert!(bound < 5.0);
        }
    }

    #[test]
    fn khat1_at_zero_is_minus_half() {
        let spec = KernelSpec::new(1, maxwellian(1.0));
        let v = khat1(&spec, Complex64::new(0.0, 0.0)).unwrap();
        assert!((v - Complex64::new(-0.5, 0.0)).norm() < 1e-12);
        assert!((1.0 - v).norm() - 1.5 < 1e-12);
        let far = khat1(&spec, Complex64::new(0.0, -10.0)).unwrap();
        assert!(far.norm() <= 0.01);
        assert!(matches!(
            khat1(&spec, Complex64::new(0.0, 0.1)),
            Err(Error::UpperHalfPlane(_))
        ));
    }

    #[test]
    fn khat1_is_resolution_independent() {
        let spec = KernelSpec::new(1, maxwellian(1.0));
        let fine = QuadratureOptions {
            panel_scale: 0.5,
            degree: 24,
            ..Default::default()
        };
        for tau in [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.3, -0.4),
            Complex64::new(-7.5, 0.0),
            Complex64::new(25.0, -3.0),
        ] {
            let a = khat1(&spec, tau).unwrap();
            let b = khat1_with(&spec, tau, &fine).unwrap();
            assert!((a - b).norm() <= 1e-8 * a.norm().max(1e-12), "{tau}");
        }
    }

    #[test]
    fn asymptotic_branch_matches_quadrature() {
        for eta in [
            maxwellian(1.0),
            maxwellian(0.1),
            Arc::new(StationaryState::two_bump(grid(), 2.0, 1.0).unwrap()),
        ] {
            let spec = KernelSpec::new(1, eta);
            for tau in [
                Complex64::new(40.0, 0.0),
                Complex64::new(-45.0, -5.0),
                Complex64::from_polar(50.0, -1.0),
                Complex64::new(0.0, -60.0),
            ] {
                let a = khat1_asymptotic(&spec, tau).expect("expansion converges");
                let b = khat1_quadrature(&spec, tau, &QuadratureOptions::default()).unwrap();
                assert!((a - b).norm() < 1e-10, "{} {tau}: {a} vs {b}", spec.eta.label());
            }
        }
    }

    #[test]
    fn khat1_matches_dense_fourier_sum() {
        let spec = KernelSpec::new(1, maxwellian(1.0));
        let dt = 1e-3;
        for tau in [0.0, 0.7, 2.5, -4.0] {
            // trapezoid on a dense grid; K(0) = 0 and K(12) ≈ 0
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..12_000 {
                let t = i as f64 * dt;
                acc += Complex64::cis(-tau * t) * kernel_k(&spec, t);
            }
            let direct = acc * dt;
            let quad = khat1(&spec, Complex64::new(tau, 0.0)).unwrap();
            assert!((direct - quad).norm() < 1e-6);
        }
    }

    #[test]
    fn unit_maxwellian_passes() {
        let rep = penrose_check(&maxwellian(1.0), DEFAULT_KAPPA0).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.zero_count, 0);
        let at_zero = rep
            .samples
            .iter()
            .find(|s| s.n == 1 && s.tau == 0.0)
            .unwrap();
        assert!((at_zero.value.norm() - 1.5).abs() < 1e-6);
        assert!(rep.kappa > 0.5);
    }

    #[test]
    fn report_is_reflection_invariant() {
        let eta = Arc::new(
            StationaryState::gaussian_mixture(
                grid(),
                vec![
                    GaussianComponent {
                        weight: 0.7,
                        center: 0.4,
                        temperature: 1.0,
                    },
                    GaussianComponent {
                        weight: 0.3,
                        center: -1.0,
                        temperature: 0.5,
                    },
                ],
                "skewed",
            )
            .unwrap(),
        );
        let opts = PenroseOptions {
            real_samples: 513,
            contour_samples: 512,
            ..Default::default()
        };
        let a = penrose_check_with(&eta, 0.1, &opts).unwrap();
        let b = penrose_check_with(&Arc::new(eta.reflected()), 0.1, &opts).unwrap();
        assert!((a.kappa - b.kappa).abs() <= 1e-10);
        assert_eq!(a.zero_count, b.zero_count);
        assert_eq!(a.pass, b.pass);
    }

    #[test]
    fn zero_kernel_has_no_root() {
        let spec = KernelSpec::new(2, maxwellian(1.0));
        assert!(matches!(landau_root_for(&spec, None), Err(Error::NoRoot)));
    }

    #[test]
    fn maxwellian_landau_root() {
        let root = landau_root(&maxwellian(1.0)).unwrap();
        assert!((root.tau - Complex64::new(1.791_911_279_273_71, 1.135_984_020_404_95)).norm() < 1e-8);
        let mirror = landau_root_for(&KernelSpec::new(-1, maxwellian(1.0)), None).unwrap();
        assert!((mirror.tau + root.tau.conj()).norm() < 1e-8);
    }
}
