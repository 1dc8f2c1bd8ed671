//! The ratio `ψ = ĝ/η`, its Fourier inversion `H`, and the feasibility
//! verdict built on `H ≥ 0`, `H ∈ L¹`.

mod feasibility;
mod oracles;
mod solve;

pub use feasibility::{check_feasibility, check_moments, Feasibility, FeasibilityOptions, MomentReport, Verdict};
pub use oracles::{lipschitz_diag, resolvent_oracle, LipschitzReport};
pub use solve::{residual, solve_h, GridParams, GridSpec, PoissonSolution, PowerTail, SolutionDiagnostics};

use crate::density::DensityPair;
use crate::levy::{CharExponent, LevyError, LevyTriplet};
use crate::numeric::golden_min;
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum PoissonError {
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error("feasibility breached at xi = {xi0}: {detail}")]
    FeasibilityBreached { xi0: f64, detail: String },
    #[error("ratio tail mass {tail:.3e} does not fall below tolerance up to |xi| = {xi_max:.3e}")]
    TailMass { tail: f64, xi_max: f64 },
    #[error("{0}")]
    Invalid(String),
}

/// How `ψ` is evaluated inside the switch radius around `ξ = 0`.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum OriginExpansion {
    /// `h₀ = h₁`, so `ψ ≡ 0`.
    Vanishing,
    /// `ψ(ξ) = Σ c_k ξ^k` from moments and cumulants.
    Series { coefficients: Vec<Complex64>, radius: f64, agreement: f64 },
    /// Moments unavailable: constant limit taken from the cancellation-free quotient at tiny `ξ`.
    Limit { value: Complex64, radius: f64 },
}

/// A nonzero root of `η` and the local treatment of `ψ` around it.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LatticeZero {
    pub location: f64,
    pub eta_abs: f64,
    pub g_hat_abs: f64,
    pub radius: f64,
}

const G_HAT_AT_ZERO_TOL: f64 = 1e-10;
const SERIES_AGREEMENT: f64 = 1e-9;
const LATTICE_ETA_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct RatioFunction {
    pair: DensityPair,
    exponent: CharExponent,
    origin: OriginExpansion,
    lattice: Vec<LatticeZero>,
    /// Frequency scale `1/σ` of the narrower density.
    xi_scale: f64,
}

impl RatioFunction {
    pub fn new(pair: DensityPair, triplet: &LevyTriplet) -> Result<Self, PoissonError> {
        let exponent = CharExponent::new(triplet)?;
        let width = pair.h0.core_scale().min(pair.h1.core_scale());
        let mut r = Self { pair, exponent, origin: OriginExpansion::Vanishing, lattice: Vec::new(), xi_scale: 1.0 / width };
        if r.pair.identical() {
            return Ok(r);
        }
        r.origin = r.origin_expansion()?;
        r.lattice = r.find_lattice_zeros()?;
        for z in &r.lattice {
            if z.g_hat_abs > G_HAT_AT_ZERO_TOL {
                return Err(PoissonError::FeasibilityBreached {
                    xi0: z.location,
                    detail: format!("eta vanishes but |g_hat| = {:.3e} (non-removable singularity)", z.g_hat_abs),
                });
            }
        }
        Ok(r)
    }

    pub fn pair(&self) -> &DensityPair {
        &self.pair
    }

    pub fn exponent(&self) -> &CharExponent {
        &self.exponent
    }

    pub fn origin(&self) -> &OriginExpansion {
        &self.origin
    }

    pub fn lattice_zeros(&self) -> &[LatticeZero] {
        &self.lattice
    }

    /// All detected zeros of `η`, including the origin.
    pub fn zero_set(&self) -> Vec<f64> {
        let mut z = vec![0.0];
        z.extend(self.lattice.iter().map(|l| l.location));
        z.sort_by(f64::total_cmp);
        z
    }

    pub(crate) fn xi_scale(&self) -> f64 {
        self.xi_scale
    }

    /// `ψ(0) = Ĥ(0) = ∫H`.
    pub fn psi_zero(&self) -> Complex64 {
        match &self.origin {
            OriginExpansion::Vanishing => Complex64::new(0.0, 0.0),
            OriginExpansion::Series { coefficients, .. } => coefficients[0],
            OriginExpansion::Limit { value, .. } => *value,
        }
    }

    fn direct(&self, xi: f64) -> Result<Complex64, PoissonError> {
        Ok(self.pair.g_hat(xi) / self.exponent.eval(xi)?)
    }

    /// `ψ(ξ) = ĝ(ξ)/η(ξ)` with removable singularities filled in.
    pub fn eval(&self, xi: f64) -> Result<Complex64, PoissonError> {
        match &self.origin {
            OriginExpansion::Vanishing => return Ok(Complex64::new(0.0, 0.0)),
            OriginExpansion::Series { coefficients, radius, .. } if xi.abs() < *radius => {
                return Ok(coefficients.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * xi + c));
            }
            OriginExpansion::Limit { value, radius } if xi.abs() < *radius => return Ok(*value),
            _ => {}
        }
        for z in &self.lattice {
            if (xi - z.location).abs() < z.radius {
                // linear bridge across the removable point
                let (a, b) = (z.location - z.radius, z.location + z.radius);
                let (fa, fb) = (self.direct(a)?, self.direct(b)?);
                let t = (xi - a) / (b - a);
                return Ok(fa * (1.0 - t) + fb * t);
            }
        }
        self.direct(xi)
    }

    fn origin_expansion(&self) -> Result<OriginExpansion, PoissonError> {
        let kappa = self.exponent.triplet().cumulants();
        let (m0, m1) = (self.pair.h0.moments().raw, self.pair.h1.moments().raw);
        let order = kappa.iter().position(|k| matches!(k, Some(v) if v.abs() > 1e-14)).map(|p| p + 1);
        if let Some(p) = order {
            let known_eta = kappa[..p].iter().all(Option::is_some);
            let a: Vec<Option<Complex64>> = (1..=4)
                .map(|j| {
                    let d = m1[j - 1]? - m0[j - 1]?;
                    Some(i_pow(j) * d / factorial(j))
                })
                .collect();
            for j in 1..p {
                if let Some(aj) = a[j - 1] {
                    let tol = 1e-8 * m0[j - 1].unwrap_or(0.0).abs().max(m1[j - 1].unwrap_or(0.0).abs()).max(1.0);
                    if aj.norm() > tol {
                        return Err(PoissonError::FeasibilityBreached {
                            xi0: 0.0,
                            detail: format!(
                                "g_hat is of order {j} at the origin but eta of order {p}: moment {j} differs by {:.3e}",
                                aj.norm() * factorial(j)
                            ),
                        });
                    }
                }
            }
            let b: Vec<Option<Complex64>> = (1..=4).map(|j| kappa[j - 1].map(|k| i_pow(j) * k / factorial(j))).collect();
            let avail = (p..=4).take_while(|&j| a[j - 1].is_some() && b[j - 1].is_some()).count();
            if known_eta && avail >= 1 {
                let a: Vec<Complex64> = (p..p + avail).map(|j| a[j - 1].unwrap()).collect();
                let b: Vec<Complex64> = (p..p + avail).map(|j| b[j - 1].unwrap()).collect();
                let mut c = vec![Complex64::new(0.0, 0.0); avail];
                for k in 0..avail {
                    let mut s = a[k];
                    for j in 1..=k {
                        s -= b[j] * c[k - j];
                    }
                    c[k] = s / b[0];
                }
                return self.series_with_radius(c);
            }
        }
        self.limit_expansion()
    }

    fn series_with_radius(&self, c: Vec<Complex64>) -> Result<OriginExpansion, PoissonError> {
        let series = |xi: f64| c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, ck| acc * xi + ck);
        let mut best: Option<(f64, f64)> = None;
        let mut first_ok = None;
        for k in 0..48 {
            let xi = self.xi_scale * 0.5f64.powi(k);
            let mut diff: f64 = 0.0;
            for s in [xi, -xi] {
                let d = self.direct(s)?;
                diff = diff.max((d - series(s)).norm() / series(s).norm().max(1.0));
            }
            if best.is_none_or(|(_, e)| diff < e) {
                best = Some((xi, diff));
            }
            if diff <= SERIES_AGREEMENT {
                first_ok = Some((xi, diff));
                break;
            }
        }
        let (radius, agreement) = first_ok.or(best).unwrap();
        Ok(OriginExpansion::Series { coefficients: c, radius, agreement })
    }

    fn limit_expansion(&self) -> Result<OriginExpansion, PoissonError> {
        let probe = |k: i32| -> Result<f64, PoissonError> {
            let xi = self.xi_scale * 10f64.powi(-k);
            Ok(self.direct(xi)?.norm().max(self.direct(-xi)?.norm()))
        };
        let (near, far) = (probe(8)?, probe(6)?);
        if !near.is_finite() || (near > 1.5 * far && near > 1e-9) {
            return Err(PoissonError::FeasibilityBreached {
                xi0: 0.0,
                detail: format!("|psi| grows from {far:.3e} to {near:.3e} as xi decreases 100-fold"),
            });
        }
        let radius = self.xi_scale * 1e-7;
        let value = 0.5 * (self.direct(radius)? + self.direct(-radius)?);
        Ok(OriginExpansion::Limit { value, radius })
    }

    fn find_lattice_zeros(&self) -> Result<Vec<LatticeZero>, PoissonError> {
        let span = 64.0 * self.xi_scale;
        let n = if self.exponent.closed_form().is_some() { 20_000 } else { 2_000 };
        let step = span / n as f64;
        let mags: Vec<f64> = (0..=n + 1).map(|k| self.exponent.eval(step * k as f64).map(|e| e.norm())).collect::<Result<_, _>>()?;
        let typical = mags.iter().cloned().fold(0.0, f64::max);
        let mut zeros = Vec::new();
        for k in 1..=n {
            if mags[k] <= mags[k - 1] && mags[k] <= mags[k + 1] && mags[k] < 1e-2 * typical.max(1e-300) {
                let (lo, hi) = (step * (k - 1) as f64, step * (k + 1) as f64);
                let (u, m) = golden_min(|u| self.exponent.eval(u).map(|e| e.norm()).unwrap_or(f64::INFINITY), lo, hi, 200);
                if m < LATTICE_ETA_TOL {
                    let radius = 1e-3 * step.min(1.0);
                    for loc in [u, -u] {
                        let g = self.pair.g_hat(loc).norm();
                        zeros.push(LatticeZero { location: loc, eta_abs: m, g_hat_abs: g, radius });
                    }
                }
            }
        }
        zeros.sort_by(|a, b| a.location.total_cmp(&b.location));
        Ok(zeros)
    }
}

fn i_pow(j: usize) -> Complex64 {
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)][j % 4]
}

fn factorial(j: usize) -> f64 {
    (1..=j).map(|k| k as f64).product()
}

/// `ψ(ξ)` for a ratio function.
pub fn ratio_eval(r: &RatioFunction, xi: f64) -> Result<Complex64, PoissonError> {
    r.eval(xi)
}
