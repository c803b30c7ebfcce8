//! Exact split flows of the Vlasov-HMF equation, the Lie and Strang
//! compositions, the shift function `s_h(t)`, the streaming frame and the
//! time-stepping driver.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{
    columns_to_physical_into, columns_to_rows, fourier_coefficient, physical_to_columns_into,
    random_smooth_field, rows_to_columns, FftPlans, MixedField, NormWorkspace, PhaseGrid,
    WeightedNormSpec, Which,
};

/// One Gaussian term `w e^{-(v-c)²/(2T)} / (2π √(2πT))` of a homogeneous profile.
///
/// The `1/2π` makes the phase-space mass of the term equal to `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub center: f64,
    pub temperature: f64,
}

impl GaussianComponent {
    pub fn eval(&self, v: f64) -> f64 {
        let t = self.temperature;
        self.weight * (-(v - self.center).powi(2) / (2.0 * t)).exp()
            / (2.0 * PI * (2.0 * PI * t).sqrt())
    }

    /// `∫_T ∫_R e^{-iξv} (term) dx dv = w e^{-iξc} e^{-Tξ²/2}`, valid for complex ξ.
    pub fn hat(&self, xi: Complex64) -> Complex64 {
        self.weight * (Complex64::new(0.0, -self.center) * xi - 0.5 * self.temperature * xi * xi).exp()
    }

    /// Raw moments `∫ v^m (normalized Gaussian) dv` for `m = 0..=max`.
    fn moments(&self, max: usize) -> Vec<f64> {
        let mut m = vec![1.0; max + 1];
        if max >= 1 {
            m[1] = self.center;
        }
        for k in 2..=max {
            m[k] = self.center * m[k - 1] + (k - 1) as f64 * self.temperature * m[k - 2];
        }
        m
    }
}

/// Spatially homogeneous stationary profile `η(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryState {
    grid: PhaseGrid,
    label: String,
    profile: Vec<f64>,
    closed_form: Option<Vec<GaussianComponent>>,
}

impl StationaryState {
    /// Maxwellian of the given temperature with unit phase-space mass.
    pub fn maxwellian(grid: PhaseGrid, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::param("eta.temperature", format!("{temperature} must be > 0")));
        }
        Self::gaussian_mixture(
            grid,
            vec![GaussianComponent {
                weight: 1.0,
                center: 0.0,
                temperature,
            }],
            format!("maxwellian(T={temperature})"),
        )
    }

    /// `½ (M(v - a) + M(v + a))` with `M` a Maxwellian of the given temperature.
    pub fn two_bump(grid: PhaseGrid, separation: f64, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::param("eta.temperature", format!("{temperature} must be > 0")));
        }
        if !separation.is_finite() {
            return Err(Error::param("eta.separation", "must be finite"));
        }
        let comp = |c| GaussianComponent {
            weight: 0.5,
            center: c,
            temperature,
        };
        Self::gaussian_mixture(
            grid,
            vec![comp(separation), comp(-separation)],
            format!("two_bump(a={separation},T={temperature})"),
        )
    }

    pub fn gaussian_mixture(
        grid: PhaseGrid,
        components: Vec<GaussianComponent>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::param("eta", "mixture needs at least one component"));
        }
        for c in &components {
            if !(c.temperature > 0.0) || !c.weight.is_finite() || !c.center.is_finite() {
                return Err(Error::param("eta", format!("invalid component {c:?}")));
            }
        }
        let profile = grid
            .velocities()
            .iter()
            .map(|&v| components.iter().map(|c| c.eval(v)).sum())
            .collect();
        Self::build(grid, profile, Some(components), label.into())
    }

    /// Profile given by its samples on the velocity grid; `η̂₀` by quadrature.
    pub fn from_samples(grid: PhaseGrid, profile: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if profile.len() != grid.n_v() {
            return Err(Error::param(
                "eta",
                format!("expected {} samples, got {}", grid.n_v(), profile.len()),
            ));
        }
        if profile.iter().any(|p| !p.is_finite()) {
            return Err(Error::param("eta", "non-finite sample"));
        }
        Self::build(grid, profile, None, label.into())
    }

    fn build(
        grid: PhaseGrid,
        profile: Vec<f64>,
        closed_form: Option<Vec<GaussianComponent>>,
        label: String,
    ) -> Result<Self> {
        let mass: f64 = profile.iter().sum::<f64>() * grid.dv();
        if !(mass > 0.0) {
            return Err(Error::param("eta", format!("mass {mass} must be positive")));
        }
        Ok(StationaryState {
            grid,
            label,
            profile,
            closed_form,
        })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    pub fn components(&self) -> Option<&[GaussianComponent]> {
        self.closed_form.as_deref()
    }

    pub fn has_closed_form(&self) -> bool {
        self.closed_form.is_some()
    }

    /// `Σ_j η(v_j) Δv`
    pub fn mass(&self) -> f64 {
        self.profile.iter().sum::<f64>() * self.grid.dv()
    }

    pub fn to_field(&self) -> MixedField {
        MixedField::homogeneous(self.grid, &self.profile).expect("profile sized to grid")
    }

    /// `η̂₀(ξ) = ∫_T ∫_R η(v) e^{-iξv} dx dv`; closed form when available,
    /// otherwise the grid quadrature (meaningful for `|ξ| < π/Δv`).
    pub fn eta_hat(&self, xi: Complex64) -> Complex64 {
        match &self.closed_form {
            Some(comps) => comps.iter().map(|c| c.hat(xi)).sum(),
            None => self.eta_hat_sampled(xi),
        }
    }

    pub fn eta_hat_sampled(&self, xi: Complex64) -> Complex64 {
        let g = &self.grid;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &p) in self.profile.iter().enumerate() {
            acc += p * (Complex64::new(0.0, -g.v(j)) * xi).exp();
        }
        acc * (2.0 * PI * g.dv())
    }

    /// Derivatives `η̂₀^{(m)}(0) = ∫∫ (-iv)^m η` for `m = 0..=max`.
    pub fn eta_hat_derivatives_at_zero(&self, max: usize) -> Vec<Complex64> {
        let raw: Vec<f64> = match &self.closed_form {
            Some(comps) => {
                let mut acc = vec![0.0; max + 1];
                for c in comps {
                    for (a, m) in acc.iter_mut().zip(c.moments(max)) {
                        *a += c.weight * m;
                    }
                }
                acc
            }
            None => (0..=max)
                .map(|m| {
                    2.0 * PI
                        * self.grid.dv()
                        * self
                            .profile
                            .iter()
                            .enumerate()
                            .map(|(j, p)| p * self.grid.v(j).powi(m as i32))
                            .sum::<f64>()
                })
                .collect(),
        };
        let mut phase = Complex64::new(1.0, 0.0);
        raw.into_iter()
            .map(|r| {
                let out = phase * r;
                phase *= Complex64::new(0.0, -1.0);
                out
            })
            .collect()
    }

    /// The profile `v ↦ η(-v)`.
    pub fn reflected(&self) -> StationaryState {
        let n = self.grid.n_v();
        // v_{(n - j) mod n} = -v_j on the grid [-L, L)
        let profile = (0..n).map(|j| self.profile[(n - j) % n]).collect();
        let closed_form = self.closed_form.as_ref().map(|comps| {
            comps
                .iter()
                .map(|c| GaussianComponent {
                    center: -c.center,
                    ..*c
                })
                .collect()
        });
        StationaryState {
            grid: self.grid,
            label: format!("reflected {}", self.label),
            profile,
            closed_form,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplittingVariant {
    /// `φ_P^h ∘ φ_T^h`: transport first, then kick.
    LieTP,
    /// `φ_T^h ∘ φ_P^h`: kick first, then transport.
    LiePT,
    /// `φ_T^{h/2} ∘ φ_P^h ∘ φ_T^{h/2}`
    Strang,
    /// `φ_P^{h/2} ∘ φ_T^h ∘ φ_P^{h/2}`
    StrangPTP,
}

impl SplittingVariant {
    pub const ALL: [SplittingVariant; 4] = [
        SplittingVariant::LieTP,
        SplittingVariant::LiePT,
        SplittingVariant::Strang,
        SplittingVariant::StrangPTP,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SplittingVariant::LieTP => "lie_tp",
            SplittingVariant::LiePT => "lie_pt",
            SplittingVariant::Strang => "strang",
            SplittingVariant::StrangPTP => "strang_ptp",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == name)
            .ok_or_else(|| {
                Error::param(
                    "scheme.variant",
                    format!("unknown variant `{name}` (lie_tp, lie_pt, strang, strang_ptp)"),
                )
            })
    }

    pub fn is_lie(self) -> bool {
        matches!(self, SplittingVariant::LieTP | SplittingVariant::LiePT)
    }

    /// Pieces of one step on which `s_h` is constant: `(start, end, offset)`
    /// with start/end as fractions of `h` and `s_h = (n + offset) h`.
    pub fn shift_segments(self) -> &'static [(f64, f64, f64)] {
        match self {
            SplittingVariant::LieTP => &[(0.0, 1.0, 1.0)],
            SplittingVariant::LiePT => &[(0.0, 1.0, 0.0)],
            SplittingVariant::Strang => &[(0.0, 1.0, 0.5)],
            SplittingVariant::StrangPTP => &[(0.0, 0.5, 0.0), (0.5, 1.0, 1.0)],
        }
    }
}

impl std::fmt::Display for SplittingVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeSpec {
    pub variant: SplittingVariant,
    pub h: f64,
}

impl SchemeSpec {
    pub fn new(variant: SplittingVariant, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::param("scheme.h", format!("time step {h} must be positive")));
        }
        Ok(SchemeSpec { variant, h })
    }

    /// Number of steps to reach `t`, which must lie on the step grid.
    pub fn steps_to(&self, t: f64) -> Result<u64> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::OffGrid { t, h: self.h });
        }
        let n = (t / self.h).round();
        if (n * self.h - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::OffGrid { t, h: self.h });
        }
        Ok(n as u64)
    }

    /// Kick times `s_h` for step `n`, with the kick durations.
    pub(crate) fn kicks(&self, n: u64) -> Vec<(f64, f64)> {
        self.variant
            .shift_segments()
            .iter()
            .map(|&(a, b, off)| ((n as f64 + off) * self.h, (b - a) * self.h))
            .collect()
    }
}

/// `s_h(t)` for `t = nh + t_local`.
pub fn shift_time(scheme: &SchemeSpec, n: u64, t_local: f64) -> Result<f64> {
    let h = scheme.h;
    if !(t_local >= 0.0 && t_local < h) {
        return Err(Error::TimeOutsideStep { t_local, h });
    }
    let frac = t_local / h;
    let &(_, _, off) = scheme
        .variant
        .shift_segments()
        .iter()
        .find(|&&(a, b, _)| frac >= a && frac < b)
        .unwrap_or(scheme.variant.shift_segments().last().expect("nonempty"));
    Ok((n as f64 + off) * h)
}

/// `∫_{nh}^{(n+1)h} (σ - s_h(σ)) dσ`, by two-point Gauss-Legendre on each
/// piece (exact for the linear integrand). Evaluated in step-local time, so
/// the value does not depend on `n`.
pub fn shift_defect(scheme: &SchemeSpec) -> f64 {
    let h = scheme.h;
    let node = 1.0 / 3f64.sqrt();
    let mut total = 0.0;
    for &(a, b, off) in scheme.variant.shift_segments() {
        let (lo, hi) = (a * h, b * h);
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let s = off * h;
        total += half * ((mid - half * node - s) + (mid + half * node - s));
    }
    total
}

/// `(C, S) = (∫∫ cos(y) f, ∫∫ sin(y) f)`; the field is `E(x) = -C sin x + S cos x`.
pub fn field_coefficients(f: &MixedField) -> (f64, f64) {
    let dv = f.grid().dv();
    let p: Complex64 = f.row(1).iter().sum::<Complex64>() * dv;
    let m: Complex64 = f.row(-1).iter().sum::<Complex64>() * dv;
    let c = PI * (p + m);
    let s = Complex64::new(0.0, PI) * (p - m);
    (c.re, s.re)
}

pub fn electric_field(c: f64, s: f64, x: f64) -> f64 {
    -c * x.sin() + s * x.cos()
}

/// Exact free flow `f(x - tv, v)`: `f̂_k(v_j) ↦ e^{-iktv_j} f̂_k(v_j)`.
///
/// The unpaired row `k = -n_x/2` is left untouched, as a phase there would
/// make real fields complex.
pub fn free_transport(f: &MixedField, t: f64) -> MixedField {
    let mut out = f.clone();
    transport_in_place(&mut out, t);
    out
}

pub(crate) fn transport_in_place(f: &mut MixedField, t: f64) {
    if t == 0.0 {
        return;
    }
    let g = *f.grid();
    for k in g.modes() {
        if k == 0 || k == g.k_min() {
            continue;
        }
        let kt = k as f64 * t;
        for (j, c) in f.row_mut(k).iter_mut().enumerate() {
            *c *= Complex64::cis(-kt * g.v(j));
        }
    }
}

/// Exact kick flow `f(x, v + tE(f, x))`.
pub fn kick(f: &MixedField, t: f64) -> MixedField {
    let mut out = f.clone();
    Kicker::new(*f.grid()).kick(&mut out, t);
    out
}

/// Buffers and plans for the kick flow.
#[derive(Debug)]
pub(crate) struct Kicker {
    grid: PhaseGrid,
    plans: FftPlans,
    cols: Vec<Complex64>,
    phys: Vec<Complex64>,
    phase: Vec<Complex64>,
    last_field: (f64, f64),
}

impl Kicker {
    pub(crate) fn new(grid: PhaseGrid) -> Self {
        Kicker {
            grid,
            plans: FftPlans::new(&grid),
            cols: vec![Complex64::new(0.0, 0.0); grid.len()],
            phys: vec![Complex64::new(0.0, 0.0); grid.len()],
            phase: vec![Complex64::new(0.0, 0.0); grid.n_v()],
            last_field: (0.0, 0.0),
        }
    }

    pub(crate) fn kick(&mut self, f: &mut MixedField, t: f64) {
        let (c, s) = field_coefficients(f);
        self.last_field = (c, s);
        if t == 0.0 || (c == 0.0 && s == 0.0) {
            return;
        }
        let g = self.grid;
        let (nx, nv) = (g.n_x(), g.n_v());
        rows_to_columns(&g, f.coeffs(), &mut self.cols);
        self.plans.run(Which::XInv, &mut self.cols);
        columns_to_physical_into(&g, &self.cols, &mut self.phys);
        self.plans.run(Which::VFwd, &mut self.phys);
        let inv_n = 1.0 / nv as f64;
        let half = nv / 2;
        for i in 0..nx {
            let shift = t * electric_field(c, s, g.x(i));
            // e^{iξ_m d} for m ≥ 0 computed directly; negative m by conjugation
            for m in 0..half {
                let p = Complex64::cis(g.xi(m as i64) * shift);
                self.phase[m] = p * inv_n;
                if m > 0 {
                    self.phase[nv - m] = p.conj() * inv_n;
                }
            }
            // The Nyquist slot has no partner: any phase other than ±1 would
            // either make real columns complex or lose L². It is left as is.
            self.phase[half] = Complex64::new(inv_n, 0.0);
            for (a, p) in self.phys[i * nv..(i + 1) * nv].iter_mut().zip(&self.phase) {
                *a *= p;
            }
        }
        self.plans.run(Which::VInv, &mut self.phys);
        physical_to_columns_into(&g, &self.phys, &mut self.cols);
        self.plans.run(Which::XFwd, &mut self.cols);
        columns_to_rows(&g, &self.cols, 1.0 / nx as f64, f.coeffs_mut());
    }
}

/// Time stepper for one scheme on one grid, with cached transport phases.
#[derive(Debug)]
pub struct SplitStepper {
    grid: PhaseGrid,
    scheme: SchemeSpec,
    interaction: bool,
    kicker: Kicker,
    transport_full: Vec<Complex64>,
    transport_half: Vec<Complex64>,
}

fn transport_table(grid: &PhaseGrid, t: f64) -> Vec<Complex64> {
    let mut table = Vec::with_capacity(grid.len());
    for k in grid.modes() {
        let kt = if k == grid.k_min() { 0.0 } else { k as f64 * t };
        for j in 0..grid.n_v() {
            table.push(Complex64::cis(-kt * grid.v(j)));
        }
    }
    table
}

impl SplitStepper {
    pub fn new(grid: PhaseGrid, scheme: SchemeSpec) -> Self {
        SplitStepper {
            grid,
            scheme,
            interaction: true,
            kicker: Kicker::new(grid),
            transport_full: transport_table(&grid, scheme.h),
            transport_half: transport_table(&grid, 0.5 * scheme.h),
        }
    }

    /// Replaces every kick by the identity (pure free streaming).
    pub fn with_interaction(mut self, on: bool) -> Self {
        self.interaction = on;
        self
    }

    pub fn scheme(&self) -> &SchemeSpec {
        &self.scheme
    }

    /// `(C, S)` consumed by the most recent kick.
    pub fn last_field(&self) -> (f64, f64) {
        self.kicker.last_field
    }

    fn transport(&mut self, f: &mut MixedField, half: bool) {
        let table = if half {
            &self.transport_half
        } else {
            &self.transport_full
        };
        for (c, p) in f.coeffs_mut().iter_mut().zip(table) {
            *c *= p;
        }
    }

    fn kick(&mut self, f: &mut MixedField, t: f64) {
        if self.interaction {
            self.kicker.kick(f, t);
        }
    }

    pub fn step(&mut self, f: &mut MixedField) {
        debug_assert_eq!(*f.grid(), self.grid);
        let h = self.scheme.h;
        match self.scheme.variant {
            SplittingVariant::LieTP => {
                self.transport(f, false);
                self.kick(f, h);
            }
            SplittingVariant::LiePT => {
                self.kick(f, h);
                self.transport(f, false);
            }
            SplittingVariant::Strang => {
                self.transport(f, true);
                self.kick(f, h);
                self.transport(f, true);
            }
            SplittingVariant::StrangPTP => {
                self.kick(f, 0.5 * h);
                self.transport(f, false);
                self.kick(f, 0.5 * h);
            }
        }
    }
}

/// Full simulation state `f^n = η + ε r^n`.
#[derive(Debug, Clone)]
pub struct SimState {
    pub f: MixedField,
    pub n: u64,
    pub epsilon: f64,
    pub eta: Arc<StationaryState>,
    pub scheme: SchemeSpec,
}

impl SimState {
    /// `f⁰ = η + ε r⁰`
    pub fn new(eta: Arc<StationaryState>, r0: &MixedField, epsilon: f64, scheme: SchemeSpec) -> Result<Self> {
        if r0.grid() != eta.grid() {
            return Err(Error::param("r0", "grid differs from the stationary state grid"));
        }
        if !epsilon.is_finite() {
            return Err(Error::param("sim.epsilon", "must be finite"));
        }
        let mut f = eta.to_field();
        f.add_scaled(epsilon, r0);
        Ok(SimState {
            f,
            n: 0,
            epsilon,
            eta,
            scheme,
        })
    }

    pub fn time(&self) -> f64 {
        self.n as f64 * self.scheme.h
    }

    /// `r = (f - η)/ε`, taken as zero when `ε = 0`.
    pub fn perturbation(&self) -> MixedField {
        let mut r = self.f.clone();
        if self.epsilon == 0.0 {
            r.scale(0.0);
            return r;
        }
        for (c, &p) in r.row_mut(0).iter_mut().zip(self.eta.profile()) {
            *c -= p;
        }
        r.scale(1.0 / self.epsilon);
        r
    }

    /// `g^n(x, v) = r^n(x + nhv, v)`.
    pub fn streaming_frame(&self) -> Result<MixedField> {
        if self.epsilon == 0.0 {
            return Err(Error::ZeroEpsilon);
        }
        Ok(self.streaming_frame_or_zero())
    }

    pub(crate) fn streaming_frame_or_zero(&self) -> MixedField {
        let mut g = self.perturbation();
        transport_in_place(&mut g, -self.time());
        g
    }
}

pub fn streaming_frame(state: &SimState) -> Result<MixedField> {
    state.streaming_frame()
}

/// One step of the state's scheme.
pub fn step(state: &SimState) -> SimState {
    let mut next = state.clone();
    SplitStepper::new(*state.f.grid(), state.scheme).step(&mut next.f);
    next.n += 1;
    next
}

/// Distance between `η + εg^n` and the same field rebuilt from `g^{n-1}`
/// through `φ_T^{-s} ∘ φ_P ∘ φ_T^{s}` (one factor per kick of step `n-1`).
pub fn prop31_identity_residual(
    eta: &StationaryState,
    epsilon: f64,
    scheme: &SchemeSpec,
    n: u64,
    g_prev: &MixedField,
    g_next: &MixedField,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroStep);
    }
    let base = eta.to_field();
    let mut rhs = base.clone();
    rhs.add_scaled(epsilon, g_prev);
    for (s, dur) in scheme.kicks(n - 1) {
        rhs = free_transport(&kick(&free_transport(&rhs, s), dur), -s);
    }
    let mut lhs = base;
    lhs.add_scaled(epsilon, g_next);
    Ok(lhs.distance_l2(&rhs))
}

/// Initial perturbation `r⁰`.
#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    /// `cos(x) η(v) / ‖η‖`
    SingleMode,
    /// Seeded sum of harmonics `k = 0..3` with Gaussian velocity profiles,
    /// normalized to unit L² norm.
    MultiMode { seed: u64 },
    Field(MixedField),
}

impl Perturbation {
    pub fn build(&self, eta: &StationaryState) -> Result<MixedField> {
        let grid = *eta.grid();
        match self {
            Perturbation::SingleMode => {
                let norm = eta.to_field().l2_norm();
                let prof = eta.profile();
                let mut r = MixedField::zeros(grid);
                for k in [-1, 1] {
                    for (c, &p) in r.row_mut(k).iter_mut().zip(prof) {
                        *c = Complex64::new(0.5 * p / norm, 0.0);
                    }
                }
                Ok(r)
            }
            Perturbation::MultiMode { seed } => {
                let mut r = random_smooth_field(grid, *seed);
                let norm = r.l2_norm();
                r.scale(1.0 / norm);
                Ok(r)
            }
            Perturbation::Field(r) => {
                if *r.grid() != grid {
                    return Err(Error::param("r0", "grid differs from the stationary state grid"));
                }
                Ok(r.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EtaSpec {
    Maxwellian { temperature: f64 },
    TwoBump { separation: f64, temperature: f64 },
    Samples { profile: Vec<f64>, label: String },
}

impl EtaSpec {
    pub fn build(&self, grid: PhaseGrid) -> Result<StationaryState> {
        match self {
            EtaSpec::Maxwellian { temperature } => StationaryState::maxwellian(grid, *temperature),
            EtaSpec::TwoBump {
                separation,
                temperature,
            } => StationaryState::two_bump(grid, *separation, *temperature),
            EtaSpec::Samples { profile, label } => {
                StationaryState::from_samples(grid, profile.clone(), label.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: PhaseGrid,
    pub scheme: SchemeSpec,
    pub epsilon: f64,
    pub final_time: f64,
    pub snapshot_times: Vec<f64>,
    pub eta: EtaSpec,
    pub perturbation: Perturbation,
    /// `false` replaces every kick by the identity.
    pub interaction: bool,
    /// Norms of `g^n` recorded at every step.
    pub norms: Vec<WeightedNormSpec>,
    pub recurrence_safety_factor: f64,
    /// Abort when a recorded norm exceeds this multiple of its initial value.
    pub blowup_factor: f64,
}

impl RunConfig {
    pub fn new(grid: PhaseGrid, scheme: SchemeSpec, epsilon: f64, final_time: f64) -> Self {
        RunConfig {
            grid,
            scheme,
            epsilon,
            final_time,
            snapshot_times: Vec::new(),
            eta: EtaSpec::Maxwellian { temperature: 1.0 },
            perturbation: Perturbation::SingleMode,
            interaction: true,
            norms: Vec::new(),
            recurrence_safety_factor: 0.5,
            blowup_factor: 1e6,
        }
    }
}

/// Diagnostics at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub n: u64,
    pub t: f64,
    /// `s_h(nh)`
    pub s: f64,
    /// Density coefficients `ζ_{±1}` of `f^n`.
    pub zeta_p1: Complex64,
    pub zeta_m1: Complex64,
    /// `Z_{±1} = ĝ_{±1}(±s_h(nh))` of the streaming-frame field.
    pub z_p1: Complex64,
    pub z_m1: Complex64,
    pub mass: f64,
    pub l2: f64,
    /// Norms of `g^n`, in the order of [`Trajectory::norm_specs`].
    pub norms: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub n: u64,
    pub t: f64,
    /// Streaming-frame field `g^n`.
    pub g: MixedField,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub scheme: SchemeSpec,
    pub epsilon: f64,
    pub eta: Arc<StationaryState>,
    pub norm_specs: Vec<WeightedNormSpec>,
    pub records: Vec<StepRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: SimState,
}

impl Trajectory {
    pub fn grid(&self) -> &PhaseGrid {
        self.eta.grid()
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&Snapshot> {
        let n = self.scheme.steps_to(t).ok()?;
        self.snapshots.iter().find(|s| s.n == n)
    }
}

/// Drives a [`SimState`] and produces the per-step diagnostics.
#[derive(Debug)]
pub struct Simulation {
    state: SimState,
    stepper: SplitStepper,
    norms: NormWorkspace,
}

impl Simulation {
    pub fn new(state: SimState, interaction: bool) -> Self {
        let grid = *state.f.grid();
        Simulation {
            stepper: SplitStepper::new(grid, state.scheme).with_interaction(interaction),
            norms: NormWorkspace::new(grid),
            state,
        }
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn into_state(self) -> SimState {
        self.state
    }

    pub fn advance(&mut self) {
        self.stepper.step(&mut self.state.f);
        self.state.n += 1;
    }

    pub fn advance_to(&mut self, n: u64) {
        while self.state.n < n {
            self.advance();
        }
    }

    pub fn streaming_frame(&self) -> MixedField {
        self.state.streaming_frame_or_zero()
    }

    pub fn norm(&mut self, field: &MixedField, spec: WeightedNormSpec) -> f64 {
        self.norms.sobolev_norm(field, spec)
    }

    pub fn record(&mut self, specs: &[WeightedNormSpec]) -> (StepRecord, MixedField) {
        let st = &self.state;
        let g = st.streaming_frame_or_zero();
        let s = shift_time(&st.scheme, st.n, 0.0).expect("t_local = 0 is in range");
        let zeta_p1 = st.f.density_coefficient(1).expect("mode 1 resolved");
        let zeta_m1 = st.f.density_coefficient(-1).expect("mode -1 resolved");
        let z_p1 = fourier_coefficient(&g, 1, s).expect("mode 1 resolved");
        let z_m1 = fourier_coefficient(&g, -1, -s).expect("mode -1 resolved");
        let rec = StepRecord {
            n: st.n,
            t: st.time(),
            s,
            zeta_p1,
            zeta_m1,
            z_p1,
            z_m1,
            mass: st.f.mass(),
            l2: st.f.l2_norm(),
            norms: Vec::new(),
        };
        let norms = specs.iter().map(|&sp| self.norms.sobolev_norm(&g, sp)).collect();
        (StepRecord { norms, ..rec }, g)
    }
}

/// Runs the configured simulation from `η + εr⁰` to the final time.
pub fn run(config: &RunConfig) -> Result<Trajectory> {
    let eta = Arc::new(config.eta.build(config.grid)?);
    let r0 = config.perturbation.build(&eta)?;
    let steps = config.scheme.steps_to(config.final_time)?;
    let mut snap_steps = Vec::new();
    for &t in &config.snapshot_times {
        let n = config.scheme.steps_to(t)?;
        if n > steps {
            return Err(Error::param("sim.snapshot_times", format!("{t} is past the final time")));
        }
        snap_steps.push(n);
    }
    snap_steps.sort_unstable();
    snap_steps.dedup();
    let horizon = config.recurrence_safety_factor * config.grid.recurrence_time();
    if config.final_time > horizon {
        log::warn!(
            "final time {} exceeds {} x recurrence time {:.6}; expect recurrence echoes",
            config.final_time,
            config.recurrence_safety_factor,
            config.grid.recurrence_time()
        );
    }

    let state = SimState::new(eta.clone(), &r0, config.epsilon, config.scheme)?;
    let mut sim = Simulation::new(state, config.interaction);
    let mut records = Vec::with_capacity(steps as usize + 1);
    let mut snapshots = Vec::new();
    let mut ceilings: Option<Vec<f64>> = None;
    let mut next_snap = snap_steps.iter().peekable();
    loop {
        let (rec, g) = sim.record(&config.norms);
        let values = std::iter::once(("L2(f)".to_string(), rec.l2)).chain(
            config
                .norms
                .iter()
                .zip(&rec.norms)
                .map(|(sp, &v)| (format!("{}(g)", sp.label()), v)),
        );
        let values: Vec<(String, f64)> = values.collect();
        let limits = ceilings.get_or_insert_with(|| {
            values
                .iter()
                .map(|(_, v)| config.blowup_factor * v.max(f64::MIN_POSITIVE))
                .collect()
        });
        for ((what, value), &ceiling) in values.into_iter().zip(limits.iter()) {
            if !value.is_finite() || value > ceiling {
                return Err(Error::BlowUp {
                    step: rec.n,
                    time: rec.t,
                    what,
                    value,
                    ceiling,
                });
            }
        }
        if next_snap.peek() == Some(&&rec.n) {
            next_snap.next();
            snapshots.push(Snapshot {
                n: rec.n,
                t: rec.t,
                g,
            });
        }
        records.push(rec);
        if sim.state().n >= steps {
            break;
        }
        sim.advance();
    }
    Ok(Trajectory {
        scheme: config.scheme,
        epsilon: config.epsilon,
        eta,
        norm_specs: config.norms.clone(),
        records,
        snapshots,
        final_state: sim.into_state(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> PhaseGrid {
        PhaseGrid::new(16, 64, 8.0).unwrap()
    }

    fn gaussian(v: f64) -> f64 {
        (-v * v / 2.0).exp() / (2.0 * PI).sqrt()
    }

    fn perturbed(seed: u64, eps: f64, variant: SplittingVariant, h: f64) -> SimState {
        let eta = Arc::new(StationaryState::maxwellian(grid(), 1.0).unwrap());
        let r0 = Perturbation::MultiMode { seed }.build(&eta).unwrap();
        SimState::new(eta, &r0, eps, SchemeSpec::new(variant, h).unwrap()).unwrap()
    }

    #[test]
    fn field_coefficients_of_cosine_and_sine() {
        let g = grid();
        let eps = 0.01;
        let f = MixedField::from_physical(g, |x, v| {
            (-v * v / 2.0).exp() / (2.0 * PI).powf(1.5) + eps * x.cos() * gaussian(v)
        });
        let (c, s) = field_coefficients(&f);
        assert!((c - eps * PI).abs() < 1e-14);
        assert!(s.abs() < 1e-15);
        let f = MixedField::from_physical(g, |x, v| eps * x.sin() * gaussian(v));
        let (c, s) = field_coefficients(&f);
        assert!(c.abs() < 1e-15);
        assert!((s - eps * PI).abs() < 1e-14);
        let eta = StationaryState::maxwellian(g, 1.0).unwrap();
        assert_eq!(field_coefficients(&eta.to_field()), (0.0, 0.0));
    }

    #[test]
    fn transport_is_a_group() {
        let f = random_smooth_field(grid(), 4);
        assert_eq!(free_transport(&f, 0.0), f);
        let a = free_transport(&free_transport(&f, 0.7), 1.9);
        let b = free_transport(&f, 2.6);
        assert!(a.distance_l2(&b) <= 1e-13 * f.l2_norm());
    }

    #[test]
    fn transport_damps_gaussian_density() {
        let g = PhaseGrid::new(8, 128, 8.0).unwrap();
        let f = MixedField::from_physical(g, |x, v| x.cos() * (-v * v / 2.0).exp());
        let rho0 = f.density_coefficient(1).unwrap().norm();
        for t in [0.5, 2.0, 5.0, 10.0, 20.0, g.recurrence_time() / 2.0] {
            let rho = free_transport(&f, t).density_coefficient(1).unwrap().norm();
            assert!((rho / rho0 - (-t * t / 2.0).exp()).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn kick_group_property_and_column_mass() {
        let st = perturbed(2, 0.1, SplittingVariant::Strang, 0.1);
        let f = &st.f;
        let a = kick(&kick(f, 0.3), 0.45);
        let b = kick(f, 0.75);
        assert!(a.distance_l2(&b) <= 1e-12 * f.l2_norm());

        let g = *f.grid();
        let before = f.to_physical();
        let after = kick(f, 0.75).to_physical();
        for i in 0..g.n_x() {
            let m0: f64 = before[i * g.n_v()..(i + 1) * g.n_v()].iter().map(|c| c.re).sum();
            let m1: f64 = after[i * g.n_v()..(i + 1) * g.n_v()].iter().map(|c| c.re).sum();
            assert!(((m0 - m1) * g.dv()).abs() < 1e-13);
        }
        let (c0, s0) = field_coefficients(f);
        let (c1, s1) = field_coefficients(&kick(f, 0.75));
        assert!((c0 - c1).abs() < 1e-12 && (s0 - s1).abs() < 1e-12);
    }

    #[test]
    fn kick_on_homogeneous_is_identity() {
        let eta = StationaryState::maxwellian(grid(), 1.0).unwrap().to_field();
        assert_eq!(kick(&eta, 3.0), eta);
    }

    #[test]
    fn kick_shifts_velocity_by_field() {
        // f = η(v) + δ(x,v) with a small k=1 part: check the shift against
        // direct evaluation of the band-limited interpolant at v + tE(x)
        let g = PhaseGrid::new(8, 128, 8.0).unwrap();
        let f = MixedField::from_physical(g, |x, v| (1.0 + 0.3 * x.cos()) * (-(v - 0.5).powi(2) / 2.0).exp());
        let (c, s) = field_coefficients(&f);
        let t = 0.8;
        let kicked = kick(&f, t).to_physical();
        for i in 0..g.n_x() {
            let x = g.x(i);
            let e = electric_field(c, s, x);
            for j in (0..g.n_v()).step_by(7) {
                let v = g.v(j) + t * e;
                // the velocity domain is periodized
                let exact: f64 = [-16.0, 0.0, 16.0]
                    .iter()
                    .map(|p| (1.0 + 0.3 * x.cos()) * (-(v + p - 0.5).powi(2) / 2.0).exp())
                    .sum();
                assert!((kicked[i * g.n_v() + j].re - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shift_time_examples() {
        let s = |v| SchemeSpec::new(v, 0.1).unwrap();
        let tl = 0.37 - 0.3;
        assert!((shift_time(&s(SplittingVariant::Strang), 3, tl).unwrap() - 0.35).abs() < 1e-15);
        assert!((shift_time(&s(SplittingVariant::LieTP), 3, tl).unwrap() - 0.4).abs() < 1e-15);
        assert!((shift_time(&s(SplittingVariant::LiePT), 3, tl).unwrap() - 0.3).abs() < 1e-15);
        assert!((shift_time(&s(SplittingVariant::StrangPTP), 3, 0.02).unwrap() - 0.3).abs() < 1e-15);
        assert!((shift_time(&s(SplittingVariant::StrangPTP), 3, 0.07).unwrap() - 0.4).abs() < 1e-15);
        assert!(shift_time(&s(SplittingVariant::Strang), 3, 0.1).is_err());
        assert!(shift_time(&s(SplittingVariant::Strang), 3, -0.01).is_err());
    }

    #[test]
    fn midpoint_cancellation() {
        for h in [0.2, 0.1, 0.05, 0.013] {
            let d = |v| shift_defect(&SchemeSpec::new(v, h).unwrap());
            assert!(d(SplittingVariant::Strang).abs() < 1e-14);
            assert!(d(SplittingVariant::StrangPTP).abs() < 1e-14);
            assert!((d(SplittingVariant::LieTP) + h * h / 2.0).abs() < 1e-14);
            assert!((d(SplittingVariant::LiePT) - h * h / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn stationary_state_is_invariant() {
        for v in SplittingVariant::ALL {
            let st = perturbed(1, 0.0, v, 0.1);
            let mut sim = Simulation::new(st.clone(), true);
            sim.advance_to(20);
            assert_eq!(sim.state().f, st.f);
        }
    }

    #[test]
    fn strang_without_field_is_transport() {
        let eta = Arc::new(StationaryState::maxwellian(grid(), 1.0).unwrap());
        let mut r = MixedField::zeros(grid());
        r.row_mut(0).copy_from_slice(&eta.to_field().row(0).to_vec());
        let st = SimState::new(eta, &r, 0.5, SchemeSpec::new(SplittingVariant::Strang, 0.1).unwrap()).unwrap();
        let next = step(&st);
        assert!(next.f.distance_l2(&free_transport(&st.f, 0.1)) < 1e-15);
        assert_eq!(next.n, 1);
    }

    #[test]
    fn lie_variants_are_adjoint() {
        let st = perturbed(8, 0.05, SplittingVariant::LieTP, 0.1);
        let fwd = step(&SimState {
            scheme: SchemeSpec {
                variant: SplittingVariant::LiePT,
                h: 0.1,
            },
            ..st.clone()
        });
        let mut back = fwd.f.clone();
        // LieTP with step -h: transport by -h, then kick by -h
        transport_in_place(&mut back, -0.1);
        back = kick(&back, -0.1);
        assert!(back.distance_l2(&st.f) <= 1e-12 * st.f.l2_norm());
    }

    #[test]
    fn streaming_frame_inverts_transport() {
        let mut st = perturbed(3, 0.01, SplittingVariant::Strang, 0.1);
        assert!(st.streaming_frame().unwrap().distance_l2(&st.perturbation()) == 0.0);
        let mut sim = Simulation::new(st.clone(), true);
        sim.advance_to(13);
        st = sim.into_state();
        let g = st.streaming_frame().unwrap();
        let r = st.perturbation();
        assert!((g.l2_norm() - r.l2_norm()).abs() <= 1e-13 * r.l2_norm());
        assert!(free_transport(&g, st.time()).distance_l2(&r) <= 1e-13 * r.l2_norm());
        // ζ_k(nh) = ε ĝ_k(k nh)
        for k in [-1i64, 1] {
            let zeta = st.f.density_coefficient(k).unwrap();
            let via_g = fourier_coefficient(&g, k, k as f64 * st.time()).unwrap() * st.epsilon;
            assert!((zeta - via_g).norm() < 1e-12);
        }
        let zero = SimState {
            epsilon: 0.0,
            ..st
        };
        assert!(matches!(zero.streaming_frame(), Err(Error::ZeroEpsilon)));
    }

    fn identity_residual(variant: SplittingVariant, eps: f64, n: u64) -> f64 {
        let st = perturbed(21, eps, variant, 0.1);
        let mut sim = Simulation::new(st, true);
        sim.advance_to(n - 1);
        let prev = sim.streaming_frame();
        sim.advance();
        let next = sim.streaming_frame();
        let st = sim.state();
        prop31_identity_residual(&st.eta, eps, &st.scheme, n, &prev, &next).unwrap()
    }

    #[test]
    fn operator_identity_holds_for_every_variant() {
        for v in SplittingVariant::ALL {
            for n in [1, 5, 50] {
                let r = identity_residual(v, 0.01, n);
                assert!(r <= 1e-11, "{v} n={n}: {r}");
            }
        }
        assert!(identity_residual(SplittingVariant::Strang, 0.0, 3) < 1e-15);
        let eta = StationaryState::maxwellian(grid(), 1.0).unwrap();
        let z = MixedField::zeros(grid());
        let s = SchemeSpec::new(SplittingVariant::Strang, 0.1).unwrap();
        assert!(matches!(
            prop31_identity_residual(&eta, 0.01, &s, 0, &z, &z),
            Err(Error::ZeroStep)
        ));
    }

    #[test]
    fn wrong_pairing_breaks_the_identity() {
        // the LieTP field with the LiePT shift must not satisfy the identity
        let st = perturbed(21, 0.1, SplittingVariant::LieTP, 0.1);
        let mut sim = Simulation::new(st, true);
        sim.advance_to(4);
        let prev = sim.streaming_frame();
        sim.advance();
        let next = sim.streaming_frame();
        let wrong = SchemeSpec::new(SplittingVariant::LiePT, 0.1).unwrap();
        let r = prop31_identity_residual(&sim.state().eta, 0.1, &wrong, 5, &prev, &next).unwrap();
        assert!(r > 1e-6, "{r}");
    }

    #[test]
    fn strang_local_error_is_third_order() {
        let base = perturbed(5, 0.3, SplittingVariant::Strang, 0.2);
        let mut errs = Vec::new();
        let hs = [0.2, 0.1, 0.05];
        for &h in &hs {
            let st = SimState {
                scheme: SchemeSpec::new(SplittingVariant::Strang, h).unwrap(),
                ..base.clone()
            };
            let one = step(&st);
            let mut fine = Simulation::new(
                SimState {
                    scheme: SchemeSpec::new(SplittingVariant::Strang, h / 64.0).unwrap(),
                    ..base.clone()
                },
                true,
            );
            fine.advance_to(64);
            errs.push(one.f.distance_l2(&fine.state().f));
        }
        let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let slope = crate::numerics::linear_fit(&xs, &ys).unwrap().slope;
        assert!((2.7..=3.3).contains(&slope), "slope {slope}, errors {errs:?}");
    }

    #[test]
    fn run_records_and_snapshots() {
        let g = grid();
        let scheme = SchemeSpec::new(SplittingVariant::Strang, 0.1).unwrap();
        let mut cfg = RunConfig::new(g, scheme, 0.01, 2.0);
        cfg.snapshot_times = vec![0.0, 1.0, 2.0];
        cfg.norms = vec![WeightedNormSpec::new(1, 1.0).unwrap()];
        let traj = run(&cfg).unwrap();
        assert_eq!(traj.records.len(), 21);
        assert_eq!(traj.snapshots.len(), 3);
        assert_eq!(traj.records[10].n, 10);
        assert!((traj.records[10].s - 1.05).abs() < 1e-14);
        for rec in &traj.records {
            assert!((rec.zeta_m1 - rec.zeta_p1.conj()).norm() < 1e-12);
        }
        cfg.snapshot_times = vec![0.55];
        assert!(matches!(run(&cfg), Err(Error::OffGrid { .. })));
        cfg.snapshot_times.clear();
        cfg.final_time = 2.03;
        assert!(matches!(run(&cfg), Err(Error::OffGrid { .. })));
    }

    #[test]
    fn zero_epsilon_run_is_stationary() {
        let scheme = SchemeSpec::new(SplittingVariant::LieTP, 0.1).unwrap();
        let mut cfg = RunConfig::new(grid(), scheme, 0.0, 1.0);
        cfg.norms = vec![WeightedNormSpec::new(2, 1.0).unwrap()];
        let traj = run(&cfg).unwrap();
        for rec in &traj.records {
            assert_eq!(rec.zeta_p1, Complex64::new(0.0, 0.0));
            assert_eq!(rec.z_p1, Complex64::new(0.0, 0.0));
            assert_eq!(rec.norms[0], 0.0);
        }
        assert_eq!(traj.final_state.f, traj.eta.to_field());
    }

    #[test]
    fn blow_up_is_reported() {
        let scheme = SchemeSpec::new(SplittingVariant::Strang, 0.1).unwrap();
        let mut cfg = RunConfig::new(grid(), scheme, 0.01, 2.0);
        cfg.norms = vec![WeightedNormSpec::new(1, 0.0).unwrap()];
        // a ceiling below the initial values trips at once
        cfg.blowup_factor = 0.5;
        cfg.perturbation = Perturbation::MultiMode { seed: 1 };
        let err = run(&cfg).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }));
        assert!(err.is_numerical());
    }

    #[test]
    fn eta_hat_closed_form_matches_quadrature() {
        let g = PhaseGrid::new(8, 256, 8.0).unwrap();
        for eta in [
            StationaryState::maxwellian(g, 1.0).unwrap(),
            StationaryState::maxwellian(g, 0.1).unwrap(),
            StationaryState::two_bump(g, 2.0, 1.0).unwrap(),
        ] {
            // the two-bump tail at v = ±L is e^{-18}, which bounds the agreement
            let tol = if eta.label().starts_with("two_bump") { 1e-8 } else { 1e-13 };
            for xi in [0.0, 0.3, 1.7, 4.0] {
                let z = Complex64::new(xi, 0.0);
                assert!((eta.eta_hat(z) - eta.eta_hat_sampled(z)).norm() < tol);
            }
            assert!((eta.mass() * 2.0 * PI - 1.0).abs() < tol);
            let d = eta.eta_hat_derivatives_at_zero(3);
            let h = 1e-4;
            let fd = (eta.eta_hat(Complex64::new(h, 0.0)) - eta.eta_hat(Complex64::new(-h, 0.0))) / (2.0 * h);
            assert!((fd - d[1]).norm() < 1e-7);
        }
        assert!(StationaryState::from_samples(g, vec![0.0; 256], "zero").is_err());
        assert!(StationaryState::maxwellian(g, -1.0).is_err());
    }

    #[test]
    fn reflection_negates_velocities() {
        let g = PhaseGrid::new(8, 64, 6.0).unwrap();
        let eta = StationaryState::gaussian_mixture(
            g,
            vec![GaussianComponent {
                weight: 1.0,
                center: 0.7,
                temperature: 0.5,
            }],
            "shifted",
        )
        .unwrap();
        let refl = eta.reflected();
        for j in 1..g.n_v() {
            let expect = eta.components().unwrap()[0].eval(-g.v(j));
            assert!((refl.profile()[j] - expect).abs() < 1e-15);
        }
        let z = Complex64::new(1.3, -0.2);
        assert!((refl.eta_hat(z) - eta.eta_hat(-z)).norm() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn steps_conserve_mass_and_l2(seed in 0u64..1000, vi in 0usize..4, h in 0.01f64..0.5) {
            let st = perturbed(seed, 0.05, SplittingVariant::ALL[vi], h);
            let mut sim = Simulation::new(st.clone(), true);
            sim.advance_to(25);
            let f = &sim.state().f;
            prop_assert!((f.mass() - st.f.mass()).abs() <= 1e-13 * st.f.mass());
            prop_assert!((f.l2_norm() - st.f.l2_norm()).abs() <= 1e-13 * st.f.l2_norm());
            prop_assert!(f.conjugate_asymmetry() < 1e-14);
        }

        #[test]
        fn shift_time_stays_in_reach(n in 0u64..10_000, frac in 0.0f64..1.0, vi in 0usize..4) {
            let scheme = SchemeSpec::new(SplittingVariant::ALL[vi], 0.05).unwrap();
            let tl = frac * 0.05 * 0.999_999;
            let s = shift_time(&scheme, n, tl).unwrap();
            let t = n as f64 * 0.05 + tl;
            prop_assert!((s - t).abs() <= 0.05 * (1.0 + 1e-9));
        }
    }
}
