//! Small numerical helpers shared by the analysis modules: least-squares
//! line fits and an adaptive composite Gauss-Legendre integrator for
//! complex integrands on a finite interval.

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `ys` against `xs`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::param("ys", "length differs from xs"));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "line fit needs at least 2 points, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// `⟨x⟩ = (1 + x²)^{1/2}`
#[inline]
pub fn japanese(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Adaptive composite Gauss-Legendre quadrature.
///
/// The interval is first cut into panels no wider than `max_panel`; every
/// panel is then bisected until the one-panel and two-half-panel estimates
/// agree to the requested share of the global tolerance.
#[derive(Debug, Clone)]
pub struct Integrator {
    nodes: Vec<(f64, f64)>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
}

impl Integrator {
    pub fn new(degree: usize, rel_tol: f64, abs_tol: f64) -> Self {
        let rule = GaussLegendre::new(degree).expect("Gauss-Legendre degree >= 2");
        Integrator {
            nodes: rule.as_node_weight_pairs().to_vec(),
            rel_tol,
            abs_tol,
            max_depth: 30,
        }
    }

    fn panel<F: Fn(f64) -> Complex64>(&self, f: &F, a: f64, b: f64) -> Complex64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = Complex64::new(0.0, 0.0);
        for &(x, w) in &self.nodes {
            acc += f(mid + half * x) * w;
        }
        acc * half
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> Complex64>(
        &self,
        f: F,
        a: f64,
        b: f64,
        max_panel: f64,
    ) -> Result<Complex64> {
        if !(b > a) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let n_panels = ((b - a) / max_panel).ceil().max(1.0) as usize;
        let width = (b - a) / n_panels as f64;
        let coarse: Vec<Complex64> = (0..n_panels)
            .map(|i| {
                let lo = a + i as f64 * width;
                self.panel(&f, lo, lo + width)
            })
            .collect();
        let scale: f64 = coarse.iter().map(|c| c.norm()).sum::<f64>();
        let tol = (self.rel_tol * scale).max(self.abs_tol);
        let mut total = Complex64::new(0.0, 0.0);
        for (i, whole) in coarse.into_iter().enumerate() {
            let lo = a + i as f64 * width;
            total += self.refine(&f, lo, lo + width, whole, tol * width / (b - a), 0)?;
        }
        Ok(total)
    }

    fn refine<F: Fn(f64) -> Complex64>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        whole: Complex64,
        tol: f64,
        depth: u32,
    ) -> Result<Complex64> {
        let m = 0.5 * (a + b);
        let left = self.panel(f, a, m);
        let right = self.panel(f, m, b);
        let split = left + right;
        if (split - whole).norm() <= tol {
            return Ok(split);
        }
        if depth >= self.max_depth {
            return Err(Error::Quadrature(format!(
                "no convergence on [{a}, {b}] after {depth} bisections"
            )));
        }
        Ok(self.refine(f, a, m, left, 0.5 * tol, depth + 1)?
            + self.refine(f, m, b, right, 0.5 * tol, depth + 1)?)
    }
}
