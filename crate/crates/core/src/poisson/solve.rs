//! Trapezoidal Fourier inversion of `ψ` onto a uniform grid.

use super::{PoissonError, RatioFunction};
use crate::density::DensityPair;
use crate::interp::UniformSpline;
use crate::levy::{adjoint_apply, dyadic_tail, LevyTriplet, TailEstimate, TailVerdict, TestFunction};
use crate::quad::{integrate, KahanSum, QuadOptions};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

/// Overrides for the default inversion grid; unset fields are chosen from the densities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    pub half_width: Option<f64>,
    pub dx: Option<f64>,
    pub xi_max: Option<f64>,
    pub center: Option<f64>,
    pub tail_mass_tol: Option<f64>,
    pub residual_points: Option<usize>,
}

const DEFAULT_TAIL_MASS: f64 = 1e-8;
const SD_COVER: f64 = 8.0;
const HEAVY_TAIL_MASS: f64 = 1e-4;
const RESIDUAL_POINTS: usize = 161;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub center: f64,
    pub half_width: f64,
    pub dx: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn x(&self, j: usize) -> f64 {
        self.center - self.half_width + self.dx * j as f64
    }

    pub fn x_min(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn x_max(&self) -> f64 {
        self.center + self.half_width
    }
}

/// `H(x) ≈ value_at_edge · (d/edge)^{-exponent}` beyond the grid, `d = |x - center|`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct PowerTail {
    pub edge: f64,
    pub value_at_edge: f64,
    pub exponent: f64,
    /// False when the edge values did not support a decaying fit; the tail is then zero.
    pub fitted: bool,
}

impl PowerTail {
    fn fit(d_in: f64, h_in: f64, d_edge: f64, h_edge: f64) -> Self {
        if h_in > 0.0 && h_edge > 0.0 && h_in > h_edge {
            let beta = (h_in / h_edge).ln() / (d_edge / d_in).ln();
            Self { edge: d_edge, value_at_edge: h_edge, exponent: beta.min(1e6), fitted: true }
        } else {
            Self { edge: d_edge, value_at_edge: 0.0, exponent: f64::INFINITY, fitted: false }
        }
    }

    fn eval3(&self, d: f64) -> (f64, f64, f64) {
        if !self.fitted || self.value_at_edge == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let b = self.exponent;
        let v = self.value_at_edge * (d / self.edge).powf(-b);
        (v, -b * v / d, b * (b + 1.0) * v / (d * d))
    }

    pub fn integrable(&self) -> bool {
        !self.fitted || self.exponent > 1.0
    }

    /// `∫_edge^∞` of the model.
    pub fn mass(&self) -> f64 {
        if !self.fitted {
            0.0
        } else if self.exponent > 1.0 {
            self.value_at_edge * self.edge / (self.exponent - 1.0)
        } else {
            f64::INFINITY
        }
    }
}

/// Serializable summary of a solve.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolutionDiagnostics {
    pub grid: GridSpec,
    pub xi_max: f64,
    pub dxi: f64,
    pub l1_ratio: f64,
    pub l1_tail: TailEstimate,
    pub tail_mass_beyond_xi_max: f64,
    pub min_h: f64,
    pub max_h: f64,
    pub integral_h: f64,
    pub integral_h_grid: f64,
    pub integral_h_tails: f64,
    pub psi_zero: f64,
    pub integral_consistency: f64,
    pub imag_residue: f64,
    pub residual_sup: f64,
    pub fourier_identity: f64,
    pub left_tail: PowerTail,
    pub right_tail: PowerTail,
}

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub diagnostics: SolutionDiagnostics,
    values: Vec<f64>,
    spline: UniformSpline,
}

impl PoissonSolution {
    pub fn grid(&self) -> &GridSpec {
        &self.diagnostics.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_h(&self) -> f64 {
        self.diagnostics.min_h
    }

    pub fn max_h(&self) -> f64 {
        self.diagnostics.max_h
    }

    pub fn integral_h(&self) -> f64 {
        self.diagnostics.integral_h
    }

    pub fn is_off_grid(&self, x: f64) -> bool {
        !self.spline.contains(x)
    }

    /// `H(x)`: cubic interpolant on the grid, fitted power tail beyond it.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval3(x).0
    }

    /// Two-column CSV `x,H`.
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "x,H")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.grid().x(j), v)?;
        }
        w.flush()
    }
}

impl TestFunction for PoissonSolution {
    fn eval3(&self, x: f64) -> (f64, f64, f64) {
        if self.spline.contains(x) {
            return self.spline.eval3(x);
        }
        let c = self.grid().center;
        let d = (x - c).abs();
        if x > c {
            self.diagnostics.right_tail.eval3(d)
        } else {
            let (v, d1, d2) = self.diagnostics.left_tail.eval3(d);
            (v, -d1, d2)
        }
    }
}

fn default_grid(pair: &DensityPair, params: &GridParams) -> GridSpec {
    let (h0, h1) = (&pair.h0, &pair.h1);
    let center = params.center.unwrap_or(0.5 * (h0.center() + h1.center()));
    let reach = |h: &crate::density::Density| match h.sd() {
        Some(sd) => (h.center() - center).abs() + SD_COVER * sd,
        None => (h.center() - center).abs() + h.tail_extent(HEAVY_TAIL_MASS),
    };
    let half_width = params.half_width.unwrap_or_else(|| reach(h0).max(reach(h1)));
    let core = h0.core_scale().min(h1.core_scale());
    let m = match params.dx {
        Some(dx) => (half_width / dx).round().max(2.0) as usize,
        None => 4096usize.max((64.0 * half_width / core).ceil() as usize),
    };
    let dx = half_width / m as f64;
    GridSpec { center, half_width, dx, n: 2 * m + 1 }
}

/// Tail of `∫|ψ|` beyond `start` by dyadic blocks, with the per-block masses.
fn ratio_tail(r: &RatioFunction, start: f64) -> Result<(TailEstimate, Vec<(f64, f64)>), PoissonError> {
    let opts = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-8, max_intervals: 4000 };
    let mut blocks = Vec::new();
    let err = std::cell::RefCell::new(None);
    let est = dyadic_tail(
        |a, b| {
            let f = |xi: f64| match (r.eval(xi), r.eval(-xi)) {
                (Ok(p), Ok(m)) => p.norm() + m.norm(),
                (Err(e), _) | (_, Err(e)) => {
                    err.borrow_mut().get_or_insert_with(|| e.to_string());
                    f64::NAN
                }
            };
            let v = integrate(f, a, b, opts).value;
            blocks.push((a, v));
            Ok(v)
        },
        start,
        start * 2f64.powi(40),
    )?;
    if let Some(e) = err.into_inner() {
        return Err(PoissonError::Invalid(e));
    }
    Ok((est, blocks))
}

/// Invert `ψ` on a uniform grid by the trapezoidal rule in frequency.
pub fn solve_h(r: &RatioFunction, params: &GridParams) -> Result<PoissonSolution, PoissonError> {
    let grid = default_grid(r.pair(), params);
    let tol = params.tail_mass_tol.unwrap_or(DEFAULT_TAIL_MASS);
    let start = 4.0 * r.xi_scale();
    let (tail, blocks) = ratio_tail(r, start)?;
    if tail.verdict != TailVerdict::Converges {
        return Err(PoissonError::TailMass { tail: tail.last_increment, xi_max: tail.upper_limit });
    }
    // smallest dyadic boundary whose remaining mass is below tol
    let mut xi_max = start;
    let mut remaining = tail.value;
    for &(a, v) in &blocks {
        if remaining < tol {
            break;
        }
        remaining -= v;
        xi_max = 2.0 * a;
    }
    if remaining >= tol {
        return Err(PoissonError::TailMass { tail: remaining, xi_max });
    }
    if let Some(x) = params.xi_max {
        xi_max = x;
    }
    let core_integral = integrate(
        |xi: f64| r.eval(xi).map(|p| p.norm()).unwrap_or(f64::NAN) + r.eval(-xi).map(|p| p.norm()).unwrap_or(f64::NAN),
        0.0,
        start,
        QuadOptions::with_tol(1e-14, 1e-10),
    );
    let l1_ratio = core_integral.value + tail.value;

    // Δξ = 2π/P with alias period P = 4X
    let period = 4.0 * grid.half_width;
    let dxi = 2.0 * PI / period;
    let k_max = (xi_max / dxi).ceil() as i64;
    let ks: Vec<i64> = (-k_max..=k_max).collect();
    let psi: Vec<Complex64> = ks.par_iter().map(|&k| r.eval(k as f64 * dxi)).collect::<Result<_, _>>()?;
    let scale = dxi / (2.0 * PI);
    let sums: Vec<Complex64> = (0..grid.n)
        .into_par_iter()
        .map(|j| {
            let x = grid.x(j);
            inverse_sum(&psi, -k_max, dxi, x) * scale
        })
        .collect();
    let imag_residue = sums.iter().map(|s| s.im.abs()).fold(0.0, f64::max);
    let raw: Vec<f64> = sums.iter().map(|s| s.re).collect();
    let (values, left_tail, right_tail) = remove_images(&raw, &grid, period);
    let spline = UniformSpline::new(grid.x_min(), grid.dx, values.clone());
    let n = grid.n;
    let integral_h_grid = {
        let mut k = KahanSum::new();
        for (j, v) in values.iter().enumerate() {
            k.add(if j == 0 || j == n - 1 { 0.5 * v } else { *v });
        }
        k.value() * grid.dx
    };
    let integral_h_tails = left_tail.mass() + right_tail.mass();
    let integral_h = integral_h_grid + integral_h_tails;
    let psi_zero = r.psi_zero().re;
    let min_h = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_h = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let fourier_identity = fourier_identity(r, &values, &grid, xi_max, dxi)?;

    let mut sol = PoissonSolution {
        diagnostics: SolutionDiagnostics {
            grid,
            xi_max,
            dxi,
            l1_ratio,
            l1_tail: tail,
            tail_mass_beyond_xi_max: remaining,
            min_h,
            max_h,
            integral_h,
            integral_h_grid,
            integral_h_tails,
            psi_zero,
            integral_consistency: (integral_h - psi_zero).abs(),
            imag_residue,
            residual_sup: f64::NAN,
            fourier_identity,
            left_tail,
            right_tail,
        },
        values,
        spline,
    };
    let points = params.residual_points.unwrap_or(RESIDUAL_POINTS);
    sol.diagnostics.residual_sup = residual_on(&sol, r.exponent().triplet(), r.pair(), points)?;
    Ok(sol)
}

/// The ξ-trapezoid returns `Σ_k H(x + kP)`. Fit power tails at the grid edges,
/// subtract the periodic images they predict, and refit until stable.
fn remove_images(raw: &[f64], grid: &GridSpec, period: f64) -> (Vec<f64>, PowerTail, PowerTail) {
    let n = grid.n;
    let m4 = (n - 1) / 8;
    let d_in = grid.half_width - grid.dx * m4 as f64;
    let fit = |v: &[f64]| {
        (PowerTail::fit(d_in, v[m4], grid.half_width, v[0]), PowerTail::fit(d_in, v[n - 1 - m4], grid.half_width, v[n - 1]))
    };
    let mut values = raw.to_vec();
    let (mut left, mut right) = fit(&values);
    for _ in 0..6 {
        if !left.fitted && !right.fitted {
            break;
        }
        values = (0..n)
            .into_par_iter()
            .map(|j| {
                let u = grid.x(j) - grid.center;
                raw[j] - image_sum(&right, period, u) - image_sum(&left, period, -u)
            })
            .collect();
        let (l, r) = fit(&values);
        let settled = (l.exponent - left.exponent).abs() < 1e-10 && (r.exponent - right.exponent).abs() < 1e-10;
        (left, right) = (l, r);
        if settled {
            break;
        }
    }
    (values, left, right)
}

/// `Σ_{k≥1} T(kP + u)` with the far terms replaced by their integral.
fn image_sum(tail: &PowerTail, period: f64, u: f64) -> f64 {
    if !tail.fitted || tail.value_at_edge == 0.0 {
        return 0.0;
    }
    const TERMS: usize = 64;
    let mut s = 0.0;
    for k in 1..=TERMS {
        s += tail.eval3(k as f64 * period + u).0;
    }
    let b = tail.exponent;
    if b <= 1.0 {
        return s;
    }
    let far = (TERMS as f64 + 0.5) * period + u;
    s + tail.value_at_edge * (tail.edge / far).powf(b) * far / (period * (b - 1.0))
}

/// `Σ_k ψ_k e^{-i x ξ_k}` with a rotation recurrence reseeded every 256 terms.
fn inverse_sum(psi: &[Complex64], k_first: i64, dxi: f64, x: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, -x * dxi);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut rot = Complex64::new(1.0, 0.0);
    for (idx, p) in psi.iter().enumerate() {
        if idx % 256 == 0 {
            rot = Complex64::from_polar(1.0, -x * dxi * (k_first + idx as i64) as f64);
        }
        acc += p * rot;
        rot *= step;
    }
    acc
}

/// `max |Ĥ(ξ)η(ξ) - ĝ(ξ)|` over up to 512 inversion frequencies with `|η| > 1e-8`.
fn fourier_identity(r: &RatioFunction, values: &[f64], grid: &GridSpec, xi_max: f64, dxi: f64) -> Result<f64, PoissonError> {
    let k_max = (xi_max / dxi).ceil() as i64;
    let stride = ((2 * k_max + 1) as usize).div_ceil(512).max(1) as i64;
    let ks: Vec<i64> = (-k_max..=k_max).step_by(stride as usize).collect();
    let errs: Vec<f64> = ks
        .par_iter()
        .map(|&k| -> Result<f64, PoissonError> {
            let xi = k as f64 * dxi;
            let eta = r.exponent().eval(xi)?;
            if eta.norm() <= 1e-8 {
                return Ok(0.0);
            }
            let step = Complex64::from_polar(1.0, xi * grid.dx);
            let mut rot = Complex64::from_polar(1.0, xi * grid.x_min());
            let mut acc = Complex64::new(0.0, 0.0);
            let last = values.len() - 1;
            for (j, v) in values.iter().enumerate() {
                if j % 256 == 0 {
                    rot = Complex64::from_polar(1.0, xi * grid.x(j));
                }
                let w = if j == 0 || j == last { 0.5 } else { 1.0 };
                acc += rot * (w * v);
                rot *= step;
            }
            let h_hat = acc * grid.dx;
            Ok((h_hat * eta - r.pair().g_hat(xi)).norm())
        })
        .collect::<Result<_, _>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

fn residual_on(sol: &PoissonSolution, triplet: &LevyTriplet, pair: &DensityPair, points: usize) -> Result<f64, PoissonError> {
    if pair.identical() {
        return Ok(0.0);
    }
    let g = sol.grid();
    let inner = 0.8 * g.half_width;
    let xs: Vec<f64> = (0..points).map(|k| g.center - inner + 2.0 * inner * k as f64 / (points - 1).max(1) as f64).collect();
    let errs: Vec<f64> = xs
        .par_iter()
        .map(|&x| Ok::<f64, PoissonError>((adjoint_apply(triplet, sol, x)? - pair.g(x)).abs()))
        .collect::<Result<_, _>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

/// `sup |𝒜*H - (h₁ - h₀)|` over the inner 80% of the grid.
pub fn residual(sol: &PoissonSolution, triplet: &LevyTriplet, pair: &DensityPair) -> Result<f64, PoissonError> {
    residual_on(sol, triplet, pair, RESIDUAL_POINTS)
}
