//! Step-size ladders against a fine Strang reference: pointwise-in-time
//! order, limit-state order and growth of the distribution-frame error.
//!
//! All runs of a study advance in lockstep between checkpoints, so no
//! field history is stored. The reference is shared by every ladder of a
//! suite.

use std::sync::Arc;

use rayon::prelude::*;

use crate::dynamics::{RunConfig, SchemeSpec, SimState, Simulation, SplittingVariant};
use crate::error::{Error, Result};
use crate::numerics::linear_fit;
use crate::spectral::WeightedNormSpec;

/// Default reference refinement: `h_ref = min(h) / 16`.
pub const REFERENCE_REFINEMENT: f64 = 16.0;

/// Default horizons of [`growth_study`].
pub const GROWTH_HORIZONS: [f64; 4] = [5.0, 10.0, 20.0, 40.0];

const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct LadderSpec {
    /// Grid, `ε`, `η`, `r⁰` and interaction shared by every run. Its scheme
    /// and final time are ignored.
    pub base: RunConfig,
    pub variant: SplittingVariant,
    pub h_values: Vec<f64>,
    pub final_time: f64,
    pub error_norm: WeightedNormSpec,
    /// Overrides `min(h) / 16`.
    pub reference_h: Option<f64>,
    pub growth_horizons: Vec<f64>,
}

impl LadderSpec {
    pub fn new(base: RunConfig, variant: SplittingVariant, h_values: Vec<f64>, final_time: f64) -> Self {
        LadderSpec {
            base,
            variant,
            h_values,
            final_time,
            error_norm: WeightedNormSpec { s: 1, nu: 1.0 },
            reference_h: None,
            growth_horizons: GROWTH_HORIZONS.to_vec(),
        }
    }

    pub fn reference_step(&self) -> f64 {
        self.reference_h.unwrap_or_else(|| {
            self.h_values.iter().cloned().fold(f64::INFINITY, f64::min) / REFERENCE_REFINEMENT
        })
    }

    pub fn validate(&self) -> Result<()> {
        let hs = &self.h_values;
        if hs.len() < 3 {
            return Err(Error::param(
                "analysis.ladder",
                format!("{} step sizes given, at least 3 required", hs.len()),
            ));
        }
        if !(self.final_time > 0.0) || !self.final_time.is_finite() {
            return Err(Error::param("sim.T", format!("must be positive, got {}", self.final_time)));
        }
        for &h in hs {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::param("analysis.ladder", format!("step {h} is not positive")));
            }
            if !divides(h, self.final_time) {
                return Err(Error::param(
                    "analysis.ladder",
                    format!("step {h} does not divide T = {}", self.final_time),
                ));
            }
        }
        for w in hs.windows(2) {
            let ratio = w[0] / w[1];
            if !(ratio > 1.0) || (ratio - ratio.round()).abs() > GRID_TOL * ratio {
                return Err(Error::param(
                    "analysis.ladder",
                    format!("steps must decrease by integer ratios, got {} then {}", w[0], w[1]),
                ));
            }
        }
        let h_ref = self.reference_step();
        if !(h_ref > 0.0) {
            return Err(Error::param("analysis.reference_h", format!("must be positive, got {h_ref}")));
        }
        for &h in hs {
            if !divides(h_ref, h) {
                return Err(Error::param(
                    "analysis.reference_h",
                    format!("reference step {h_ref} does not divide {h}"),
                ));
            }
        }
        Ok(())
    }

    fn reference_description(&self) -> String {
        format!("strang h_ref = {}", self.reference_step())
    }

    fn shares_setup_with(&self, other: &LadderSpec) -> bool {
        self.base.grid == other.base.grid
            && self.base.epsilon == other.base.epsilon
            && self.base.eta == other.base.eta
            && self.base.perturbation == other.base.perturbation
            && self.base.interaction == other.base.interaction
            && self.final_time == other.final_time
            && self.reference_step() == other.reference_step()
    }
}

fn divides(h: f64, t: f64) -> bool {
    let q = t / h;
    (q - q.round()).abs() <= GRID_TOL * q.max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub variant: SplittingVariant,
    pub h_values: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
    /// Errors not strictly decreasing along the ladder.
    pub inconclusive: bool,
    pub reference: String,
    pub error_norm: WeightedNormSpec,
}

impl OrderReport {
    fn assemble(spec: &LadderSpec, errors: Vec<f64>) -> Result<Self> {
        let inconclusive = errors.windows(2).any(|w| !(w[1] < w[0]));
        let fit = if errors.iter().all(|&e| e > 0.0 && e.is_finite()) {
            let xs: Vec<f64> = spec.h_values.iter().map(|h| h.ln()).collect();
            let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
            Some(linear_fit(&xs, &ys)?)
        } else {
            None
        };
        if inconclusive {
            log::warn!(
                "{} ladder errors are not monotone in h: {:?}",
                spec.variant.name(),
                errors
            );
        }
        Ok(OrderReport {
            variant: spec.variant,
            h_values: spec.h_values.clone(),
            errors,
            slope: fit.map(|f| f.slope),
            r_squared: fit.map(|f| f.r_squared),
            inconclusive,
            reference: spec.reference_description(),
            error_norm: spec.error_norm,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRow {
    pub h: f64,
    /// Running sup of the error at each horizon.
    pub sup_errors: Vec<f64>,
    /// Slope of `log sup_error` against `log T`.
    pub exponent: Option<f64>,
    /// `sup_error(last horizon) / sup_error(first horizon)`
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub variant: SplittingVariant,
    pub sigma: u32,
    pub horizons: Vec<f64>,
    pub rows: Vec<GrowthRow>,
    pub reference: String,
}

struct Runner {
    sims: Vec<Simulation>,
    steps: Vec<f64>,
}

impl Runner {
    /// Index 0 is the reference.
    fn new(base: &RunConfig, schemes: &[SchemeSpec]) -> Result<Self> {
        let eta = Arc::new(base.eta.build(base.grid)?);
        let r0 = base.perturbation.build(&eta)?;
        let sims = schemes
            .iter()
            .map(|&sc| {
                SimState::new(eta.clone(), &r0, base.epsilon, sc)
                    .map(|st| Simulation::new(st, base.interaction))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Runner {
            sims,
            steps: schemes.iter().map(|s| s.h).collect(),
        })
    }

    /// Advances every run to the last step not after `t`; returns which runs
    /// sit exactly at `t`.
    fn advance_to(&mut self, t: f64) -> Result<Vec<bool>> {
        let targets: Vec<(u64, bool)> = self
            .steps
            .iter()
            .map(|&h| {
                let q = t / h;
                let n = (q + GRID_TOL * q.max(1.0)).floor();
                (n as u64, (q - n).abs() <= GRID_TOL * q.max(1.0))
            })
            .collect();
        self.sims
            .par_iter_mut()
            .zip(targets.par_iter())
            .for_each(|(sim, &(n, _))| sim.advance_to(n));
        for sim in &self.sims {
            let l2 = sim.state().f.l2_norm();
            if !l2.is_finite() {
                return Err(Error::BlowUp {
                    step: sim.state().n,
                    time: sim.state().time(),
                    what: "L2(f)".into(),
                    value: l2,
                    ceiling: f64::MAX,
                });
            }
        }
        Ok(targets.into_iter().map(|(_, on)| on).collect())
    }

    fn g_error(&mut self, i: usize, spec: WeightedNormSpec) -> f64 {
        let g_ref = self.sims[0].streaming_frame();
        let d = self.sims[i].streaming_frame().difference(&g_ref);
        self.sims[i].norm(&d, spec)
    }

    fn f_error(&mut self, i: usize, spec: WeightedNormSpec) -> f64 {
        let d = self.sims[i].state().f.difference(&self.sims[0].state().f);
        self.sims[i].norm(&d, spec)
    }
}

fn check_suite(specs: &[LadderSpec]) -> Result<()> {
    let first = specs
        .first()
        .ok_or_else(|| Error::param("analysis.ladder", "no ladders given"))?;
    for s in specs {
        s.validate()?;
        if !s.shares_setup_with(first) {
            return Err(Error::param(
                "analysis.ladder",
                "ladders of one suite must share grid, epsilon, eta, r0, T and reference",
            ));
        }
    }
    Ok(())
}

/// Every run of the suite, reference first, and the ladder offsets.
fn suite_schemes(specs: &[LadderSpec]) -> Result<(Vec<SchemeSpec>, Vec<usize>)> {
    let mut schemes = vec![SchemeSpec::new(SplittingVariant::Strang, specs[0].reference_step())?];
    let mut offsets = Vec::with_capacity(specs.len());
    for s in specs {
        offsets.push(schemes.len());
        for &h in &s.h_values {
            schemes.push(SchemeSpec::new(s.variant, h)?);
        }
    }
    Ok((schemes, offsets))
}

/// Coarsest-grid checkpoints `h_max, 2h_max, …, T`.
fn coarse_checkpoints(specs: &[LadderSpec]) -> Vec<f64> {
    let h_max = specs
        .iter()
        .flat_map(|s| s.h_values.iter().cloned())
        .fold(0.0, f64::max);
    let mut cps = Vec::new();
    let n = (specs[0].final_time / h_max).round() as u64;
    for c in 1..=n {
        cps.push(c as f64 * h_max);
    }
    if let Some(last) = cps.last_mut() {
        *last = specs[0].final_time;
    }
    cps
}

/// Order ladders sharing one reference: error of each `h` is the sup over the
/// coarse checkpoints of `‖g_h(t) - g_ref(t)‖`.
pub fn order_suite(specs: &[LadderSpec]) -> Result<Vec<OrderReport>> {
    check_suite(specs)?;
    let (schemes, offsets) = suite_schemes(specs)?;
    let mut runner = Runner::new(&specs[0].base, &schemes)?;
    let mut sup = vec![0.0f64; schemes.len()];
    for t in coarse_checkpoints(specs) {
        let on = runner.advance_to(t)?;
        for (si, s) in specs.iter().enumerate() {
            for k in 0..s.h_values.len() {
                let i = offsets[si] + k;
                if on[i] {
                    let e = runner.g_error(i, s.error_norm);
                    sup[i] = sup[i].max(e);
                }
            }
        }
    }
    specs
        .iter()
        .zip(&offsets)
        .map(|(s, &o)| OrderReport::assemble(s, sup[o..o + s.h_values.len()].to_vec()))
        .collect()
}

pub fn order_study(spec: &LadderSpec) -> Result<OrderReport> {
    Ok(order_suite(std::slice::from_ref(spec))?.remove(0))
}

/// Limit-state ladders: `‖g_h(T) - g_ref(T)‖` with `T` large stands in for
/// `‖g_h^∞ - g_ref^∞‖`.
pub fn limit_state_suite(specs: &[LadderSpec]) -> Result<Vec<OrderReport>> {
    check_suite(specs)?;
    let (schemes, offsets) = suite_schemes(specs)?;
    let mut runner = Runner::new(&specs[0].base, &schemes)?;
    let t = specs[0].final_time;
    runner.advance_to(t)?;
    specs
        .iter()
        .zip(&offsets)
        .map(|(s, &o)| {
            let errors = (0..s.h_values.len())
                .map(|k| runner.g_error(o + k, s.error_norm))
                .collect();
            OrderReport::assemble(s, errors)
        })
        .collect()
}

pub fn limit_state_study(spec: &LadderSpec) -> Result<OrderReport> {
    Ok(limit_state_suite(std::slice::from_ref(spec))?.remove(0))
}

/// Growth of `sup_{n ≤ T/h} ‖f^n - f_ref(nh)‖_{H^σ}` over the horizons of
/// the spec that do not exceed its final time.
pub fn growth_study(spec: &LadderSpec, sigma: u32) -> Result<GrowthReport> {
    spec.validate()?;
    let norm = WeightedNormSpec::new(sigma, 0.0)?;
    let horizons: Vec<f64> = spec
        .growth_horizons
        .iter()
        .cloned()
        .filter(|&t| t > 0.0 && t <= spec.final_time + GRID_TOL)
        .collect();
    if horizons.len() < 2 {
        return Err(Error::param(
            "analysis.growth_horizons",
            format!("need two horizons not after T = {}", spec.final_time),
        ));
    }
    let (schemes, offsets) = suite_schemes(std::slice::from_ref(spec))?;
    let o = offsets[0];
    let mut runner = Runner::new(&spec.base, &schemes)?;
    let h_min = spec.h_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let last = *horizons.last().unwrap();
    let n_cp = (last / h_min).round() as u64;
    let mut sup = vec![0.0f64; spec.h_values.len()];
    let mut rows: Vec<Vec<f64>> = vec![Vec::with_capacity(horizons.len()); spec.h_values.len()];
    let mut next_h = 0;
    for c in 1..=n_cp {
        let t = c as f64 * h_min;
        let on = runner.advance_to(t)?;
        for k in 0..spec.h_values.len() {
            if on[o + k] {
                let e = runner.f_error(o + k, norm);
                sup[k] = sup[k].max(e);
            }
        }
        while next_h < horizons.len() && horizons[next_h] <= t + GRID_TOL * t.max(1.0) {
            for k in 0..sup.len() {
                rows[k].push(sup[k]);
            }
            next_h += 1;
        }
    }
    let logs: Vec<f64> = horizons.iter().map(|t| t.ln()).collect();
    let rows = spec
        .h_values
        .iter()
        .zip(rows)
        .map(|(&h, sup_errors)| {
            let positive = sup_errors.iter().all(|&e| e > 0.0);
            let exponent = if positive {
                let ys: Vec<f64> = sup_errors.iter().map(|e| e.ln()).collect();
                linear_fit(&logs, &ys).ok().map(|f| f.slope)
            } else {
                None
            };
            let ratio = positive.then(|| sup_errors[sup_errors.len() - 1] / sup_errors[0]);
            GrowthRow {
                h,
                sup_errors,
                exponent,
                ratio,
            }
        })
        .collect();
    Ok(GrowthReport {
        variant: spec.variant,
        sigma,
        horizons,
        rows,
        reference: spec.reference_description(),
    })
}
