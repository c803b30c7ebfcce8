//! Phase-space grids, the mixed (Fourier in x, physical in v) field
//! representation, transforms, weighted Sobolev norms and the snapshot
//! file format.
//!
//! Conventions: `x ∈ [0, 2π)` with `n_x` points, `v ∈ [-L, L)` with `n_v`
//! points. The stored coefficient `f̂_k(v_j)` is the x-Fourier coefficient
//! `(1/2π) ∫ f(x, v_j) e^{-ikx} dx`, so that the joint transform
//! `f̂_k(ξ) = (1/2π) ∫∫ f e^{-ikx - iξv} dx dv` is `Σ_j f̂_k(v_j) e^{-iξ v_j} Δv`.
//! Rows are stored in signed order `k = -n_x/2, ..., n_x/2 - 1`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::numerics::{japanese, Integrator};

/// Highest derivative order accepted by [`WeightedNormSpec`].
pub const MAX_DERIVATIVE_ORDER: u32 = 8;

const SNAPSHOT_MAGIC: &[u8; 4] = b"HMF1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    n_x: usize,
    n_v: usize,
    half_width: f64,
}

/// Builds a grid with `n_x` points over `[0, 2π)` and `n_v` points over `[-L, L)`.
pub fn make_grid(n_x: usize, n_v: usize, half_width: f64) -> Result<PhaseGrid> {
    PhaseGrid::new(n_x, n_v, half_width)
}

impl PhaseGrid {
    pub fn new(n_x: usize, n_v: usize, half_width: f64) -> Result<Self> {
        for (name, n) in [("n_x", n_x), ("n_v", n_v)] {
            if n < 4 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {n} must be even and at least 4"
                )));
            }
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "velocity half-width L = {half_width} must be positive"
            )));
        }
        Ok(PhaseGrid {
            n_x,
            n_v,
            half_width,
        })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_v
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.n_x as f64
    }

    pub fn dv(&self) -> f64 {
        2.0 * self.half_width / self.n_v as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn v(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dv()
    }

    pub fn velocities(&self) -> Vec<f64> {
        (0..self.n_v).map(|j| self.v(j)).collect()
    }

    pub fn k_min(&self) -> i64 {
        -(self.n_x as i64 / 2)
    }

    pub fn k_max(&self) -> i64 {
        self.n_x as i64 / 2 - 1
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        self.k_min()..=self.k_max()
    }

    /// Velocity frequency `ξ_m = (π/L) m` for signed `m ∈ [-n_v/2, n_v/2)`.
    pub fn xi(&self, m: i64) -> f64 {
        PI * m as f64 / self.half_width
    }

    pub fn xi_spacing(&self) -> f64 {
        PI / self.half_width
    }

    pub fn max_abs_xi(&self) -> f64 {
        self.xi(self.n_v as i64 / 2)
    }

    /// Time after which free-streaming phases `e^{-i t v_j}` realign on the
    /// velocity grid.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.dv()
    }

    pub(crate) fn row_of(&self, k: i64) -> usize {
        debug_assert!(k >= self.k_min() && k <= self.k_max());
        (k - self.k_min()) as usize
    }

    pub(crate) fn mode_of_row(&self, row: usize) -> i64 {
        row as i64 + self.k_min()
    }

    /// Signed frequency index of the natural (FFT output) position `nat`.
    pub(crate) fn signed_v_index(&self, nat: usize) -> i64 {
        if nat < self.n_v / 2 {
            nat as i64
        } else {
            nat as i64 - self.n_v as i64
        }
    }

    fn check_mode(&self, k: i64) -> Result<()> {
        let limit = self.n_x as i64 / 2;
        if k.abs() >= limit {
            Err(Error::ModeOutOfRange { k, limit })
        } else {
            Ok(())
        }
    }
}

/// Cached FFT plans for one grid.
#[derive(Clone)]
pub struct FftPlans {
    pub(crate) x_fwd: Arc<dyn Fft<f64>>,
    pub(crate) x_inv: Arc<dyn Fft<f64>>,
    pub(crate) v_fwd: Arc<dyn Fft<f64>>,
    pub(crate) v_inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for FftPlans {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPlans").finish_non_exhaustive()
    }
}

impl FftPlans {
    pub fn new(grid: &PhaseGrid) -> Self {
        let mut planner = FftPlanner::new();
        let x_fwd = planner.plan_fft_forward(grid.n_x);
        let x_inv = planner.plan_fft_inverse(grid.n_x);
        let v_fwd = planner.plan_fft_forward(grid.n_v);
        let v_inv = planner.plan_fft_inverse(grid.n_v);
        let scratch_len = [&x_fwd, &x_inv, &v_fwd, &v_inv]
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        FftPlans {
            x_fwd,
            x_inv,
            v_fwd,
            v_inv,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub(crate) fn run(&mut self, which: Which, buf: &mut [Complex64]) {
        let plan = match which {
            Which::XFwd => &self.x_fwd,
            Which::XInv => &self.x_inv,
            Which::VFwd => &self.v_fwd,
            Which::VInv => &self.v_inv,
        };
        plan.process_with_scratch(buf, &mut self.scratch);
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Which {
    XFwd,
    XInv,
    VFwd,
    VInv,
}

/// Distribution function in the mixed representation `f̂_k(v_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedField {
    grid: PhaseGrid,
    coeffs: Vec<Complex64>,
}

/// Fully spectral representation `f̂_k(ξ_m)`, rows `k` and columns `m` both
/// in signed order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: PhaseGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn get(&self, k: i64, m: i64) -> Complex64 {
        let col = (m + self.grid.n_v as i64 / 2) as usize;
        self.coeffs[self.grid.row_of(k) * self.grid.n_v + col]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `(Σ |f̂_k(ξ_m)|² Δξ)^{1/2}`, the L² norm on T × R.
    pub fn l2_norm(&self) -> f64 {
        (self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.xi_spacing()).sqrt()
    }
}

impl MixedField {
    pub fn zeros(grid: PhaseGrid) -> Self {
        MixedField {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coeffs(grid: PhaseGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::param(
                "coeffs",
                format!("expected {} values, got {}", grid.len(), coeffs.len()),
            ));
        }
        Ok(MixedField { grid, coeffs })
    }

    /// Samples a real function `f(x, v)` on the grid and transforms in x.
    pub fn from_physical(grid: PhaseGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_x {
            let x = grid.x(i);
            for j in 0..grid.n_v {
                values.push(Complex64::new(f(x, grid.v(j)), 0.0));
            }
        }
        Self::from_physical_values(grid, &values).expect("length matches grid")
    }

    /// Inverse of [`MixedField::to_physical`]; `values[i * n_v + j] = f(x_i, v_j)`.
    pub fn from_physical_values(grid: PhaseGrid, values: &[Complex64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param(
                "values",
                format!("expected {} values, got {}", grid.len(), values.len()),
            ));
        }
        let mut plans = FftPlans::new(&grid);
        let mut out = MixedField::zeros(grid);
        let mut cols = physical_to_columns(&grid, values);
        plans.run(Which::XFwd, &mut cols);
        columns_to_rows(&grid, &cols, 1.0 / grid.n_x as f64, &mut out.coeffs);
        Ok(out)
    }

    /// Spatially homogeneous field: only the `k = 0` row is nonzero.
    pub fn homogeneous(grid: PhaseGrid, profile: &[f64]) -> Result<Self> {
        if profile.len() != grid.n_v {
            return Err(Error::param(
                "profile",
                format!("expected {} samples, got {}", grid.n_v, profile.len()),
            ));
        }
        let mut out = MixedField::zeros(grid);
        for (c, &p) in out.row_mut(0).iter_mut().zip(profile) {
            *c = Complex64::new(p, 0.0);
        }
        Ok(out)
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn get(&self, k: i64, j: usize) -> Complex64 {
        self.coeffs[self.grid.row_of(k) * self.grid.n_v + j]
    }

    pub fn row(&self, k: i64) -> &[Complex64] {
        let r = self.grid.row_of(k) * self.grid.n_v;
        &self.coeffs[r..r + self.grid.n_v]
    }

    pub fn row_mut(&mut self, k: i64) -> &mut [Complex64] {
        let r = self.grid.row_of(k) * self.grid.n_v;
        &mut self.coeffs[r..r + self.grid.n_v]
    }

    /// Values `f(x_i, v_j)` laid out as `[i * n_v + j]`.
    pub fn to_physical(&self) -> Vec<Complex64> {
        let mut plans = FftPlans::new(&self.grid);
        let mut cols = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        rows_to_columns(&self.grid, &self.coeffs, &mut cols);
        plans.run(Which::XInv, &mut cols);
        columns_to_physical(&self.grid, &cols)
    }

    pub fn to_spectral(&self) -> SpectralField {
        let g = self.grid;
        let mut plans = FftPlans::new(&g);
        let mut buf = self.coeffs.clone();
        plans.run(Which::VFwd, &mut buf);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); g.len()];
        let half = g.n_v / 2;
        for row in 0..g.n_x {
            let src = &buf[row * g.n_v..(row + 1) * g.n_v];
            let dst = &mut coeffs[row * g.n_v..(row + 1) * g.n_v];
            for (nat, &c) in src.iter().enumerate() {
                let m = g.signed_v_index(nat);
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                dst[(m + half as i64) as usize] = c * (sign * g.dv());
            }
        }
        SpectralField { grid: g, coeffs }
    }

    pub fn from_spectral(spec: &SpectralField) -> MixedField {
        let g = spec.grid;
        let mut plans = FftPlans::new(&g);
        let mut buf = vec![Complex64::new(0.0, 0.0); g.len()];
        let half = g.n_v / 2;
        let scale = 1.0 / (g.n_v as f64 * g.dv());
        for row in 0..g.n_x {
            let src = &spec.coeffs[row * g.n_v..(row + 1) * g.n_v];
            let dst = &mut buf[row * g.n_v..(row + 1) * g.n_v];
            for (nat, d) in dst.iter_mut().enumerate() {
                let m = g.signed_v_index(nat);
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                *d = src[(m + half as i64) as usize] * (sign * scale);
            }
        }
        plans.run(Which::VInv, &mut buf);
        MixedField {
            grid: g,
            coeffs: buf,
        }
    }

    /// Discrete L² norm on T × R: `(2π Σ_k Σ_j |f̂_k(v_j)|² Δv)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let mut acc = 0.0;
        for row in self.coeffs.chunks_exact(self.grid.n_v) {
            acc += row.iter().map(|c| c.norm_sqr()).sum::<f64>();
        }
        (2.0 * PI * self.grid.dv() * acc).sqrt()
    }

    /// `(1/2π) ∫ ρ(x) e^{-ikx} dx` with `ρ = ∫ f dv`.
    pub fn density_coefficient(&self, k: i64) -> Result<Complex64> {
        self.grid.check_mode(k)?;
        Ok(self.row(k).iter().sum::<Complex64>() * self.grid.dv())
    }

    /// Total mass `Σ_{i,j} f(x_i, v_j) Δx Δv`.
    pub fn mass(&self) -> f64 {
        2.0 * PI * self.grid.dv() * self.row(0).iter().map(|c| c.re).sum::<f64>()
    }

    pub fn distance_l2(&self, other: &MixedField) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            acc += (a - b).norm_sqr();
        }
        (2.0 * PI * self.grid.dv() * acc).sqrt()
    }

    /// `self += a * other`
    pub fn add_scaled(&mut self, a: f64, other: &MixedField) {
        for (s, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *s += o * a;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.coeffs {
            *c *= a;
        }
    }

    pub fn difference(&self, other: &MixedField) -> MixedField {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        MixedField {
            grid: self.grid,
            coeffs,
        }
    }

    /// `max |f̂_{-k}(v_j) - conj f̂_k(v_j)|` over `|k| < n_x/2`; zero for
    /// real physical fields.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 1..=self.grid.k_max() {
            for (a, b) in self.row(k).iter().zip(self.row(-k)) {
                worst = worst.max((b - a.conj()).norm());
            }
        }
        for c in self.row(0) {
            worst = worst.max(2.0 * c.im.abs());
        }
        worst
    }

    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&(self.grid.n_x as u64).to_le_bytes())?;
        w.write_all(&(self.grid.n_v as u64).to_le_bytes())?;
        w.write_all(&self.grid.half_width.to_le_bytes())?;
        for c in &self.coeffs {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot(format!("bad magic {magic:?}")));
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let n_x = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let n_v = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let half_width = f64::from_le_bytes(word);
        let grid = PhaseGrid::new(n_x, n_v, half_width)
            .map_err(|e| Error::Snapshot(format!("header: {e}")))?;
        let mut coeffs = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut word)?;
            let re = f64::from_le_bytes(word);
            r.read_exact(&mut word)?;
            let im = f64::from_le_bytes(word);
            coeffs.push(Complex64::new(re, im));
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::Snapshot("trailing bytes after payload".into()));
        }
        Ok(MixedField { grid, coeffs })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_snapshot(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_snapshot(BufReader::new(File::open(path)?))
    }
}

// Layout helpers. "columns" is the x-transform layout `[j * n_x + nat(k or i)]`.

pub(crate) fn rows_to_columns(g: &PhaseGrid, rows: &[Complex64], cols: &mut [Complex64]) {
    let (nx, nv) = (g.n_x, g.n_v);
    let half = nx / 2;
    for row in 0..nx {
        // signed row r holds k = r - n_x/2, natural slot (r + n_x/2) mod n_x
        let nat = (row + half) % nx;
        let src = &rows[row * nv..(row + 1) * nv];
        for (j, &c) in src.iter().enumerate() {
            cols[j * nx + nat] = c;
        }
    }
}

pub(crate) fn columns_to_rows(g: &PhaseGrid, cols: &[Complex64], scale: f64, rows: &mut [Complex64]) {
    let (nx, nv) = (g.n_x, g.n_v);
    let half = nx / 2;
    for row in 0..nx {
        let nat = (row + half) % nx;
        let dst = &mut rows[row * nv..(row + 1) * nv];
        for (j, d) in dst.iter_mut().enumerate() {
            *d = cols[j * nx + nat] * scale;
        }
    }
}

pub(crate) fn columns_to_physical(g: &PhaseGrid, cols: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    columns_to_physical_into(g, cols, &mut out);
    out
}

pub(crate) fn columns_to_physical_into(g: &PhaseGrid, cols: &[Complex64], out: &mut [Complex64]) {
    let (nx, nv) = (g.n_x, g.n_v);
    for j in 0..nv {
        let src = &cols[j * nx..(j + 1) * nx];
        for (i, &c) in src.iter().enumerate() {
            out[i * nv + j] = c;
        }
    }
}

pub(crate) fn physical_to_columns(g: &PhaseGrid, values: &[Complex64]) -> Vec<Complex64> {
    let mut cols = vec![Complex64::new(0.0, 0.0); g.len()];
    physical_to_columns_into(g, values, &mut cols);
    cols
}

pub(crate) fn physical_to_columns_into(g: &PhaseGrid, values: &[Complex64], cols: &mut [Complex64]) {
    let (nx, nv) = (g.n_x, g.n_v);
    for i in 0..nx {
        let src = &values[i * nv..(i + 1) * nv];
        for (j, &c) in src.iter().enumerate() {
            cols[j * nx + i] = c;
        }
    }
}

/// `f̂_k(ξ) = Σ_j f̂_k(v_j) e^{-iξ v_j} Δv` at an arbitrary real `ξ`.
pub fn fourier_coefficient(f: &MixedField, k: i64, xi: f64) -> Result<Complex64> {
    f.grid.check_mode(k)?;
    Ok(row_transform(&f.grid, f.row(k), xi))
}

pub(crate) fn row_transform(g: &PhaseGrid, row: &[Complex64], xi: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &c) in row.iter().enumerate() {
        acc += c * Complex64::cis(-xi * g.v(j));
    }
    acc * g.dv()
}

/// Index pair of the weighted space `H^s_ν`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNormSpec {
    pub s: u32,
    pub nu: f64,
}

impl WeightedNormSpec {
    pub fn new(s: u32, nu: f64) -> Result<Self> {
        if s > MAX_DERIVATIVE_ORDER {
            return Err(Error::param(
                "s",
                format!("derivative order {s} exceeds cap {MAX_DERIVATIVE_ORDER}"),
            ));
        }
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::param("nu", format!("weight exponent {nu} must be >= 0")));
        }
        Ok(WeightedNormSpec { s, nu })
    }

    pub fn l2() -> Self {
        WeightedNormSpec { s: 0, nu: 0.0 }
    }

    pub fn label(&self) -> String {
        format!("H{}_{}", self.s, self.nu)
    }
}

/// Reusable workspace for repeated norm evaluations on one grid.
#[derive(Debug)]
pub struct NormWorkspace {
    grid: PhaseGrid,
    plans: FftPlans,
    spectrum: Vec<Complex64>,
    deriv: Vec<Complex64>,
}

impl NormWorkspace {
    pub fn new(grid: PhaseGrid) -> Self {
        NormWorkspace {
            grid,
            plans: FftPlans::new(&grid),
            spectrum: vec![Complex64::new(0.0, 0.0); grid.len()],
            deriv: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// `‖f‖²_{H^s_ν} = Σ_{p+q≤s} ∫∫ (1+v²)^ν |∂_x^p ∂_v^q f|² dx dv`.
    pub fn sobolev_norm_sq(&mut self, f: &MixedField, spec: WeightedNormSpec) -> f64 {
        assert_eq!(f.grid, self.grid, "field grid differs from workspace grid");
        let g = self.grid;
        let weights: Vec<f64> = if spec.nu == 0.0 {
            vec![1.0; g.n_v]
        } else {
            (0..g.n_v)
                .map(|j| (1.0 + g.v(j) * g.v(j)).powf(spec.nu))
                .collect()
        };
        if spec.s > 0 {
            self.spectrum.copy_from_slice(&f.coeffs);
            self.plans.run(Which::VFwd, &mut self.spectrum);
        }
        let mut total = 0.0;
        for q in 0..=spec.s {
            let data: &[Complex64] = if q == 0 {
                &f.coeffs
            } else {
                let inv_n = 1.0 / g.n_v as f64;
                for (src, dst) in self
                    .spectrum
                    .chunks_exact(g.n_v)
                    .zip(self.deriv.chunks_exact_mut(g.n_v))
                {
                    for (nat, (s, d)) in src.iter().zip(dst.iter_mut()).enumerate() {
                        let ik = Complex64::new(0.0, g.xi(g.signed_v_index(nat)));
                        *d = s * ik.powu(q) * inv_n;
                    }
                }
                self.plans.run(Which::VInv, &mut self.deriv);
                &self.deriv
            };
            for (row, vals) in data.chunks_exact(g.n_v).enumerate() {
                let k2 = (g.mode_of_row(row) as f64).powi(2);
                let mut kfac = 0.0;
                let mut kp = 1.0;
                for _ in 0..=(spec.s - q) {
                    kfac += kp;
                    kp *= k2;
                }
                if kfac == 0.0 {
                    continue;
                }
                let row_sum: f64 = vals
                    .iter()
                    .zip(&weights)
                    .map(|(c, w)| w * c.norm_sqr())
                    .sum();
                total += kfac * row_sum;
            }
        }
        2.0 * PI * g.dv() * total
    }

    pub fn sobolev_norm(&mut self, f: &MixedField, spec: WeightedNormSpec) -> f64 {
        self.sobolev_norm_sq(f, spec).sqrt()
    }
}

/// Weighted Sobolev norm `‖f‖_{H^s_ν}` with spectral derivatives.
pub fn sobolev_norm(f: &MixedField, spec: WeightedNormSpec) -> f64 {
    NormWorkspace::new(f.grid).sobolev_norm(f, spec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub max_ratio: f64,
    pub bound: f64,
    /// Where the maximum was attained.
    pub argmax: (i64, f64),
    pub pass: bool,
}

/// `∫_R (1+v²)^{-ν} dv`, finite for `ν > 1/2`.
pub fn weight_integral(nu: f64) -> Result<f64> {
    if !(nu > 0.5) {
        return Err(Error::param("nu", format!("need nu > 1/2, got {nu}")));
    }
    // v = tan θ turns the integral into ∫ cos^{2ν-2} θ dθ over (-π/2, π/2)
    let q = Integrator::new(12, 1e-13, 1e-15);
    let val = q.integrate(
        |th: f64| Complex64::new(th.cos().powf(2.0 * nu - 2.0), 0.0),
        -PI / 2.0,
        PI / 2.0,
        0.25,
    )?;
    Ok(val.re)
}

/// Scans every grid frequency `(k, ξ_m)` and every split `α + β = s` of the
/// pointwise Fourier decay estimate
/// `|f̂_k(ξ)| ⟨k⟩^α ⟨ξ⟩^β ≤ 2^{s/2} C(ν) ‖f‖_{H^s_ν}` with
/// `C(ν) = (∫(1+v²)^{-ν} dv / 2π)^{1/2}`.
pub fn decay_bound_check(f: &MixedField, s: u32, nu: f64) -> Result<DecayReport> {
    let spec = WeightedNormSpec::new(s, nu)?;
    let norm = sobolev_norm(f, spec);
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let g = f.grid;
    let grid_sum: f64 = (0..g.n_v)
        .map(|j| (1.0 + g.v(j) * g.v(j)).powf(-nu))
        .sum::<f64>()
        * g.dv();
    let c_nu = (weight_integral(nu)?.max(grid_sum) / (2.0 * PI)).sqrt();
    let bound = 2f64.powf(s as f64 / 2.0) * c_nu;
    let spectral = f.to_spectral();
    let mut max_ratio = 0.0;
    let mut argmax = (0, 0.0);
    for k in (g.k_min() + 1)..=g.k_max() {
        for m in -(g.n_v as i64 / 2)..(g.n_v as i64 / 2) {
            let xi = g.xi(m);
            let base = spectral.get(k, m).norm();
            // max over α + β = s of ⟨k⟩^α ⟨ξ⟩^β is attained at an endpoint
            let weight = japanese(k as f64).max(japanese(xi)).powi(s as i32);
            let ratio = base * weight / norm;
            if ratio > max_ratio {
                max_ratio = ratio;
                argmax = (k, xi);
            }
        }
    }
    Ok(DecayReport {
        max_ratio,
        bound,
        argmax,
        pass: max_ratio <= bound,
    })
}

/// Seeded smooth real test field: a few x-harmonics with Gaussian velocity
/// profiles of random centre and width.
pub fn random_smooth_field(grid: PhaseGrid, seed: u64) -> MixedField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(f64, f64, f64, f64, f64)> = (0..4)
        .map(|k| {
            (
                k as f64,
                rng.gen_range(0.2..1.0),
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(0.6..1.4),
            )
        })
        .collect();
    MixedField::from_physical(grid, |x, v| {
        terms
            .iter()
            .map(|&(k, a, phi, c, tau)| a * (k * x + phi).cos() * (-(v - c).powi(2) / (2.0 * tau)).exp())
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_cos(grid: PhaseGrid) -> MixedField {
        MixedField::from_physical(grid, |x, v| x.cos() * (-v * v / 2.0).exp())
    }

    #[test]
    fn grid_spacings_and_recurrence() {
        let g = make_grid(64, 128, 8.0).unwrap();
        assert_eq!(g.dv(), 0.125);
        assert!((g.max_abs_xi() - 8.0 * PI).abs() < 1e-12);
        assert!((g.recurrence_time() - 16.0 * PI).abs() < 1e-12);
        assert!((g.dx() * 64.0 - 2.0 * PI).abs() < 1e-15);
        let small = make_grid(4, 4, 1.0).unwrap();
        assert_eq!(small.dx(), PI / 2.0);
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(make_grid(63, 128, 8.0).is_err());
        assert!(make_grid(2, 128, 8.0).is_err());
        assert!(make_grid(64, 7, 8.0).is_err());
        assert!(make_grid(64, 128, 0.0).is_err());
        assert!(make_grid(64, 128, -1.0).is_err());
    }

    #[test]
    fn fourier_coefficient_of_gaussian_cosine() {
        let g = make_grid(64, 128, 8.0).unwrap();
        let f = gaussian_cos(g);
        let c = fourier_coefficient(&f, 1, 0.0).unwrap();
        assert!((c.re - (2.0 * PI).sqrt() / 2.0).abs() < 1e-13);
        assert!(c.im.abs() < 1e-14);
        assert!(fourier_coefficient(&f, 0, 0.7).unwrap().norm() < 1e-14);
        assert!(fourier_coefficient(&f, 2, 0.0).unwrap().norm() < 1e-14);
        assert!(matches!(
            fourier_coefficient(&f, 32, 0.0),
            Err(Error::ModeOutOfRange { .. })
        ));
    }

    #[test]
    fn l2_norms_match_closed_forms() {
        let g = make_grid(64, 128, 8.0).unwrap();
        let f = gaussian_cos(g);
        let expect = (PI * PI.sqrt()).sqrt();
        assert!((sobolev_norm(&f, WeightedNormSpec::l2()) - expect).abs() < 1e-12);
        let h = MixedField::from_physical(g, |_, v| (-v * v / 2.0).exp());
        let expect = (2.0 * PI * PI.sqrt()).sqrt();
        assert!((sobolev_norm(&h, WeightedNormSpec::l2()) - expect).abs() < 1e-12);
        let z = MixedField::zeros(g);
        for s in 0..4 {
            assert_eq!(sobolev_norm(&z, WeightedNormSpec::new(s, 1.5).unwrap()), 0.0);
        }
    }

    #[test]
    fn sobolev_zero_order_is_exactly_l2() {
        let g = make_grid(16, 64, 6.0).unwrap();
        let f = random_smooth_field(g, 3);
        assert_eq!(sobolev_norm(&f, WeightedNormSpec::l2()), f.l2_norm());
    }

    #[test]
    fn sobolev_first_order_closed_form() {
        // f = cos x e^{-v²/2}: ‖∂_x f‖² = ‖f‖² = π√π, ‖∂_v f‖² = π ∫ v² e^{-v²} = π √π / 2
        let g = make_grid(32, 128, 8.0).unwrap();
        let f = gaussian_cos(g);
        let n = sobolev_norm(&f, WeightedNormSpec::new(1, 0.0).unwrap());
        let expect = (PI * PI.sqrt() * 2.5).sqrt();
        assert!((n - expect).abs() < 1e-11, "{n} vs {expect}");
    }

    #[test]
    fn sobolev_monotone_in_order_and_weight() {
        let g = make_grid(16, 64, 6.0).unwrap();
        let f = random_smooth_field(g, 11);
        let mut prev = 0.0;
        for s in 0..5 {
            let n = sobolev_norm(&f, WeightedNormSpec::new(s, 1.0).unwrap());
            assert!(n >= prev);
            prev = n;
        }
        let a = sobolev_norm(&f, WeightedNormSpec::new(2, 0.5).unwrap());
        let b = sobolev_norm(&f, WeightedNormSpec::new(2, 1.5).unwrap());
        assert!(b >= a);
    }

    #[test]
    fn norm_spec_caps_order() {
        assert!(WeightedNormSpec::new(MAX_DERIVATIVE_ORDER + 1, 0.0).is_err());
        assert!(WeightedNormSpec::new(2, -1.0).is_err());
    }

    #[test]
    fn representations_round_trip_and_agree() {
        let g = make_grid(16, 64, 6.0).unwrap();
        let f = random_smooth_field(g, 5);
        let phys = f.to_physical();
        let back = MixedField::from_physical_values(g, &phys).unwrap();
        let scale = f.l2_norm();
        assert!(back.distance_l2(&f) / scale < 1e-13);
        let spec = f.to_spectral();
        let again = MixedField::from_spectral(&spec);
        assert!(again.distance_l2(&f) / scale < 1e-13);

        let phys_l2 = (phys.iter().map(|c| c.norm_sqr()).sum::<f64>() * g.dx() * g.dv()).sqrt();
        assert!((phys_l2 - scale).abs() / scale < 1e-13);
        assert!((spec.l2_norm() - scale).abs() / scale < 1e-13);
        assert!(f.conjugate_asymmetry() < 1e-15);
    }

    #[test]
    fn pointwise_coefficient_matches_spectral_array() {
        let g = make_grid(8, 32, 5.0).unwrap();
        let f = random_smooth_field(g, 9);
        let spec = f.to_spectral();
        let scale = spec.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
        for k in -3..=3 {
            for m in [-16, -5, 0, 1, 7, 15] {
                let direct = fourier_coefficient(&f, k, g.xi(m)).unwrap();
                assert!((direct - spec.get(k, m)).norm() / scale < 1e-13);
            }
        }
    }

    #[test]
    fn mass_of_homogeneous_gaussian() {
        let g = make_grid(8, 128, 8.0).unwrap();
        let f = MixedField::from_physical(g, |_, v| (-v * v / 2.0).exp());
        assert!((f.mass() - 2.0 * PI * (2.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn decay_bound_holds_for_smooth_data() {
        let g = make_grid(32, 128, 8.0).unwrap();
        let rep = decay_bound_check(&gaussian_cos(g), 2, 1.0).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.max_ratio > 0.0);
        assert!(matches!(
            decay_bound_check(&MixedField::zeros(g), 2, 1.0),
            Err(Error::ZeroNorm)
        ));
    }

    #[test]
    fn weight_integral_closed_forms() {
        assert!((weight_integral(1.0).unwrap() - PI).abs() < 1e-12);
        assert!((weight_integral(2.0).unwrap() - PI / 2.0).abs() < 1e-12);
        assert!(weight_integral(0.5).is_err());
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let g = make_grid(8, 16, 3.5).unwrap();
        let f = random_smooth_field(g, 1);
        let mut bytes = Vec::new();
        f.write_snapshot(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"HMF1");
        assert_eq!(bytes.len(), 4 + 24 + 16 * g.len());
        let back = MixedField::read_snapshot(bytes.as_slice()).unwrap();
        for (a, b) in f.coeffs().iter().zip(back.coeffs()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        let mut again = Vec::new();
        back.write_snapshot(&mut again).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn snapshot_rejects_garbage() {
        assert!(MixedField::read_snapshot(&b"HMF2xxxxxxxx"[..]).is_err());
        let g = make_grid(4, 4, 1.0).unwrap();
        let mut bytes = Vec::new();
        MixedField::zeros(g).write_snapshot(&mut bytes).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(MixedField::read_snapshot(bytes.as_slice()).is_err());
    }
}
