//! Lévy triplets, their characteristic exponent and (adjoint) generator.
//!
//! The exponent convention is `E[exp(iu L_t)] = exp(t η(u))` with
//!
//! ```text
//! η(u) = -α²u²/2 + iγu + ∫ (e^{iuy} - 1 - iuy 1{|y|≤1}) ν(dy).
//! ```

mod classify;
mod generator;

pub use classify::{classify, type0_sufficient_check, ProcessClass, ProcessType, TailEstimate, TailVerdict, Type0Evidence};
pub(crate) use classify::dyadic_tail;
pub use generator::{adjoint_apply, generator_apply, CompactBump, GaussianBump, Sine, TestFunction};

use crate::numeric::{cexpm1, cexpm1_minus_linear, I};
use crate::quad::{integrate_breaks, QuadOptions};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LevyError {
    #[error("invalid triplet: {0}")]
    Invalid(String),
    #[error("quadrature did not converge on [{lo}, {hi}] (achieved error {achieved:.3e})")]
    Quadrature { achieved: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub rate: f64,
}

/// Power-law jump density `C± |y|^{-1-α}` normalised so that the symmetric
/// case has exponent `-c|u|^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableJumps {
    pub alpha: f64,
    pub scale: f64,
    #[serde(default = "half")]
    pub weight_left: f64,
    #[serde(default = "half")]
    pub weight_right: f64,
    /// Below this jump size the generator integrand uses its Taylor remainder.
    #[serde(default = "default_truncation")]
    pub truncation: f64,
}

fn half() -> f64 {
    0.5
}

fn default_truncation() -> f64 {
    1e-3
}

impl StableJumps {
    pub fn symmetric(alpha: f64, scale: f64) -> Self {
        Self { alpha, scale, weight_left: 0.5, weight_right: 0.5, truncation: default_truncation() }
    }

    /// Skewness `(w₊ - w₋)/(w₊ + w₋)`.
    pub fn beta(&self) -> f64 {
        (self.weight_right - self.weight_left) / (self.weight_right + self.weight_left)
    }

    fn k_alpha(&self) -> f64 {
        if (self.alpha - 1.0).abs() < 1e-12 {
            PI / 2.0
        } else {
            -gamma(-self.alpha) * (PI * self.alpha / 2.0).cos()
        }
    }

    /// Density constants `(C₋, C₊)`.
    pub fn constants(&self) -> (f64, f64) {
        let total = self.scale / self.k_alpha();
        let w = self.weight_left + self.weight_right;
        (total * self.weight_left / w, total * self.weight_right / w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum JumpMeasure {
    None,
    FiniteAtoms { atoms: Vec<Atom> },
    StableDensity(StableJumps),
    /// Piecewise-linear density on a grid, zero outside it.
    TabulatedDensity { grid: Vec<f64>, values: Vec<f64> },
}

impl JumpMeasure {
    pub fn is_zero(&self) -> bool {
        match self {
            JumpMeasure::None => true,
            JumpMeasure::FiniteAtoms { atoms } => atoms.is_empty(),
            JumpMeasure::StableDensity(_) => false,
            JumpMeasure::TabulatedDensity { values, .. } => values.iter().all(|&v| v == 0.0),
        }
    }

    pub fn reflected(&self) -> JumpMeasure {
        match self {
            JumpMeasure::None => JumpMeasure::None,
            JumpMeasure::FiniteAtoms { atoms } => JumpMeasure::FiniteAtoms {
                atoms: atoms.iter().map(|a| Atom { location: -a.location, rate: a.rate }).collect(),
            },
            JumpMeasure::StableDensity(s) => JumpMeasure::StableDensity(StableJumps {
                weight_left: s.weight_right,
                weight_right: s.weight_left,
                ..*s
            }),
            JumpMeasure::TabulatedDensity { grid, values } => JumpMeasure::TabulatedDensity {
                grid: grid.iter().rev().map(|x| -x).collect(),
                values: values.iter().rev().copied().collect(),
            },
        }
    }

    /// Total mass, infinite for the stable kind.
    pub fn total_mass(&self) -> f64 {
        match self {
            JumpMeasure::None => 0.0,
            JumpMeasure::FiniteAtoms { atoms } => atoms.iter().map(|a| a.rate).sum(),
            JumpMeasure::StableDensity(_) => f64::INFINITY,
            JumpMeasure::TabulatedDensity { grid, values } => tabulated_moment(grid, values, |_| 1.0),
        }
    }

    /// `∫ (y² ∧ 1) ν(dy)`.
    pub fn truncated_second_moment(&self) -> f64 {
        match self {
            JumpMeasure::None => 0.0,
            JumpMeasure::FiniteAtoms { atoms } => atoms.iter().map(|a| a.rate * a.location.powi(2).min(1.0)).sum(),
            JumpMeasure::StableDensity(s) => {
                let (cl, cr) = s.constants();
                let a = s.alpha;
                (cl + cr) * (1.0 / (2.0 - a) + 1.0 / a)
            }
            JumpMeasure::TabulatedDensity { grid, values } => tabulated_moment(grid, values, |y| (y * y).min(1.0)),
        }
    }
}

/// `∫ w(y) v(y) dy` for a piecewise-linear `v`.
pub(crate) fn tabulated_moment<W: Fn(f64) -> f64>(grid: &[f64], values: &[f64], w: W) -> f64 {
    let mut pts = tabulated_breaks(grid);
    pts.dedup();
    let opts = QuadOptions::with_tol(1e-13, 1e-12);
    integrate_breaks(|y| w(y) * linear_interp(grid, values, y), &pts, opts).value
}

pub(crate) fn linear_interp(grid: &[f64], values: &[f64], y: f64) -> f64 {
    if y < grid[0] || y > grid[grid.len() - 1] {
        return 0.0;
    }
    let i = grid.partition_point(|&g| g <= y).clamp(1, grid.len() - 1);
    let (x0, x1) = (grid[i - 1], grid[i]);
    let t = if x1 > x0 { (y - x0) / (x1 - x0) } else { 0.0 };
    values[i - 1] + t * (values[i] - values[i - 1])
}

pub(crate) fn tabulated_breaks(grid: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = grid.to_vec();
    for b in [-1.0, 0.0, 1.0] {
        if b > grid[0] && b < grid[grid.len() - 1] {
            pts.push(b);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyTriplet {
    pub alpha2: f64,
    pub gamma: f64,
    pub nu: JumpMeasure,
}

impl LevyTriplet {
    pub fn brownian(variance: f64) -> Self {
        Self { alpha2: variance, gamma: 0.0, nu: JumpMeasure::None }
    }

    pub fn symmetric_stable(alpha: f64, scale: f64) -> Self {
        Self { alpha2: 0.0, gamma: 0.0, nu: JumpMeasure::StableDensity(StableJumps::symmetric(alpha, scale)) }
    }

    pub fn compound_poisson(atoms: &[(f64, f64)], gamma: f64) -> Self {
        Self {
            alpha2: 0.0,
            gamma,
            nu: JumpMeasure::FiniteAtoms {
                atoms: atoms.iter().map(|&(location, rate)| Atom { location, rate }).collect(),
            },
        }
    }

    pub fn validate(&self) -> Result<(), LevyError> {
        let bad = |m: &str| Err(LevyError::Invalid(m.to_string()));
        if !(self.alpha2.is_finite() && self.alpha2 >= 0.0) {
            return bad("alpha2 must be finite and nonnegative");
        }
        if !self.gamma.is_finite() {
            return bad("gamma must be finite");
        }
        match &self.nu {
            JumpMeasure::None => {}
            JumpMeasure::FiniteAtoms { atoms } => {
                for a in atoms {
                    if a.location == 0.0 || !a.location.is_finite() {
                        return bad("atoms must sit at finite nonzero locations");
                    }
                    if !(a.rate > 0.0 && a.rate.is_finite()) {
                        return bad("atom rates must be positive");
                    }
                }
            }
            JumpMeasure::StableDensity(s) => {
                if !(s.alpha > 0.0 && s.alpha < 2.0) {
                    return bad("stable index must lie in (0, 2)");
                }
                if !(s.scale > 0.0 && s.scale.is_finite()) {
                    return bad("stable scale must be positive");
                }
                if s.weight_left < 0.0 || s.weight_right < 0.0 || s.weight_left + s.weight_right <= 0.0 {
                    return bad("stable weights must be nonnegative and not both zero");
                }
                if (s.alpha - 1.0).abs() < 1e-12 && s.beta().abs() > 1e-12 {
                    return bad("asymmetric stable jumps with index 1 are not supported");
                }
                if !(s.truncation > 0.0 && s.truncation < 1.0) {
                    return bad("stable truncation must lie in (0, 1)");
                }
            }
            JumpMeasure::TabulatedDensity { grid, values } => {
                if grid.len() < 2 || grid.len() != values.len() {
                    return bad("tabulated jump density needs matching grid and values of length >= 2");
                }
                if grid.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("tabulated grid must be strictly increasing");
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return bad("tabulated jump density must be finite and nonnegative");
                }
            }
        }
        if self.alpha2 == 0.0 && self.gamma == 0.0 && self.nu.is_zero() {
            return bad("constant process (all of alpha2, gamma, nu vanish)");
        }
        if !self.nu.truncated_second_moment().is_finite() {
            return bad("jump measure does not integrate y^2 ∧ 1");
        }
        Ok(())
    }

    /// Dual process triplet `(α², -γ, ν(-·))`.
    pub fn reflected(&self) -> LevyTriplet {
        LevyTriplet { alpha2: self.alpha2, gamma: -self.gamma, nu: self.nu.reflected() }
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetry_defect() < 1e-12
    }

    /// Zero for symmetric triplets; otherwise a positive size of the asymmetry.
    pub fn symmetry_defect(&self) -> f64 {
        let nu_defect = match &self.nu {
            JumpMeasure::None => 0.0,
            JumpMeasure::FiniteAtoms { atoms } => {
                let mut worst: f64 = 0.0;
                for a in atoms {
                    let mirrored: f64 = atoms
                        .iter()
                        .filter(|b| (b.location + a.location).abs() <= 1e-12 * a.location.abs())
                        .map(|b| b.rate)
                        .sum();
                    let own: f64 = atoms
                        .iter()
                        .filter(|b| (b.location - a.location).abs() <= 1e-12 * a.location.abs())
                        .map(|b| b.rate)
                        .sum();
                    worst = worst.max((mirrored - own).abs());
                }
                worst
            }
            JumpMeasure::StableDensity(s) => s.beta().abs(),
            JumpMeasure::TabulatedDensity { grid, values } => {
                let mut pts = grid.clone();
                pts.extend(grid.iter().map(|g| -g));
                pts.iter()
                    .map(|&y| (linear_interp(grid, values, y) - linear_interp(grid, values, -y)).abs())
                    .fold(0.0, f64::max)
            }
        };
        self.gamma.abs().max(nu_defect)
    }

    /// Cumulants `κ₁..κ₄` of `L₁`, `None` where they do not exist.
    pub fn cumulants(&self) -> [Option<f64>; 4] {
        match &self.nu {
            JumpMeasure::StableDensity(s) => {
                let mean = if s.alpha > 1.0 {
                    let (cl, cr) = s.constants();
                    Some(self.gamma + (cr - cl) / (s.alpha - 1.0))
                } else {
                    None
                };
                [mean, None, None, None]
            }
            nu => {
                let moment = |k: i32, outer_only: bool| -> f64 {
                    match nu {
                        JumpMeasure::None => 0.0,
                        JumpMeasure::FiniteAtoms { atoms } => atoms
                            .iter()
                            .filter(|a| !outer_only || a.location.abs() > 1.0)
                            .map(|a| a.rate * a.location.powi(k))
                            .sum(),
                        JumpMeasure::TabulatedDensity { grid, values } => tabulated_moment(grid, values, |y| {
                            if outer_only && y.abs() <= 1.0 {
                                0.0
                            } else {
                                y.powi(k)
                            }
                        }),
                        JumpMeasure::StableDensity(_) => unreachable!(),
                    }
                };
                [
                    Some(self.gamma + moment(1, true)),
                    Some(self.alpha2 + moment(2, false)),
                    Some(moment(3, false)),
                    Some(moment(4, false)),
                ]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedForm {
    Gaussian,
    Stable,
    CompoundPoisson,
    Mixed,
}

/// Characteristic exponent of a validated triplet.
#[derive(Debug, Clone)]
pub struct CharExponent {
    triplet: LevyTriplet,
    closed_form: Option<ClosedForm>,
    stable: Option<(f64, f64)>,
}

impl CharExponent {
    pub fn new(triplet: &LevyTriplet) -> Result<Self, LevyError> {
        triplet.validate()?;
        let closed_form = match (&triplet.nu, triplet.alpha2 > 0.0) {
            (JumpMeasure::None, _) => Some(ClosedForm::Gaussian),
            (JumpMeasure::StableDensity(_), false) if triplet.gamma == 0.0 => Some(ClosedForm::Stable),
            (JumpMeasure::FiniteAtoms { .. }, false) => Some(ClosedForm::CompoundPoisson),
            (JumpMeasure::TabulatedDensity { .. }, _) => None,
            _ => Some(ClosedForm::Mixed),
        };
        let stable = match &triplet.nu {
            JumpMeasure::StableDensity(s) => Some(s.constants()),
            _ => None,
        };
        Ok(Self { triplet: triplet.clone(), closed_form, stable })
    }

    pub fn triplet(&self) -> &LevyTriplet {
        &self.triplet
    }

    pub fn closed_form(&self) -> Option<ClosedForm> {
        self.closed_form
    }

    pub fn eval(&self, u: f64) -> Result<Complex64, LevyError> {
        let t = &self.triplet;
        let base = Complex64::new(-0.5 * t.alpha2 * u * u, t.gamma * u);
        let jumps = match &t.nu {
            JumpMeasure::None => Complex64::new(0.0, 0.0),
            JumpMeasure::FiniteAtoms { atoms } => atoms
                .iter()
                .map(|a| {
                    let z = I * (u * a.location);
                    a.rate * if a.location.abs() <= 1.0 { cexpm1_minus_linear(z) } else { cexpm1(z) }
                })
                .sum(),
            JumpMeasure::StableDensity(s) => {
                let (cl, cr) = self.stable.unwrap();
                stable_exponent(s, cl, cr, u)
            }
            JumpMeasure::TabulatedDensity { grid, values } => tabulated_exponent(grid, values, u)?,
        };
        Ok(base + jumps)
    }
}

fn stable_exponent(s: &StableJumps, cl: f64, cr: f64, u: f64) -> Complex64 {
    if u == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let a = s.alpha;
    let mag = s.scale * u.abs().powf(a);
    if (a - 1.0).abs() < 1e-12 {
        return Complex64::new(-mag, 0.0);
    }
    let skew = s.beta() * (PI * a / 2.0).tan() * u.signum();
    Complex64::new(-mag, mag * skew + u * (cr - cl) / (a - 1.0))
}

fn tabulated_exponent(grid: &[f64], values: &[f64], u: f64) -> Result<Complex64, LevyError> {
    if u == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut pts = tabulated_breaks(grid);
    // resolve oscillations: at least two nodes per period per cell
    let period = 2.0 * PI / u.abs();
    let mut fine = Vec::with_capacity(pts.len());
    for w in pts.windows(2) {
        let n = ((w[1] - w[0]) / period).ceil().max(1.0) as usize;
        for k in 0..n {
            fine.push(w[0] + (w[1] - w[0]) * k as f64 / n as f64);
        }
    }
    fine.push(*pts.last().unwrap());
    pts = fine;
    let f = |y: f64| {
        let v = linear_interp(grid, values, y);
        if v == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let z = I * (u * y);
        v * if y.abs() <= 1.0 { cexpm1_minus_linear(z) } else { cexpm1(z) }
    };
    let r = integrate_breaks(f, &pts, QuadOptions { abs_tol: 1e-12, rel_tol: 1e-11, max_intervals: 20_000 });
    if !r.converged {
        return Err(LevyError::Quadrature { achieved: r.error, lo: r.worst.0, hi: r.worst.1 });
    }
    Ok(r.value)
}

/// `η(u)` for the given triplet.
pub fn eta_eval(triplet: &LevyTriplet, u: f64) -> Result<Complex64, LevyError> {
    CharExponent::new(triplet)?.eval(u)
}
