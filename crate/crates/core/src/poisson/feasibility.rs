//! Acceptance or rejection of a pair from the solved `H`.

use super::{PoissonError, PoissonSolution, RatioFunction};
use crate::density::{DensityPair, RegularityReport};
use crate::levy::TailVerdict;
use crate::quad::{integrate_line, QuadOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Verdict {
    Accepted,
    Rejected { reason: String },
    Unverified { reason: String },
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted)
    }

    pub fn is_rejected(&self) -> bool {
        matches!(self, Verdict::Rejected { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeasibilityOptions {
    /// Negativity allowance relative to `max|H|`.
    pub eps_neg_rel: f64,
    pub mean_tol: f64,
    pub integral_tol: f64,
    pub residual_tol: f64,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        Self { eps_neg_rel: 1e-6, mean_tol: 1e-6, integral_tol: 1e-6, residual_tol: 1e-3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Feasibility {
    pub ratio_integrable: bool,
    pub l1_ratio: f64,
    pub h_nonnegative: bool,
    pub min_h: f64,
    pub max_h: f64,
    pub eps_neg: f64,
    pub h_integrable: bool,
    pub integral_h: f64,
    pub psi_zero: f64,
    /// `|Δmean - κ₁∫H|`; `None` when a mean or the drift cumulant is unavailable.
    pub mean_check: Option<f64>,
    pub residual_sup: f64,
    pub residual_ok: bool,
    pub regularity_passed: Option<bool>,
    pub verdict: Verdict,
}

impl Feasibility {
    /// Verdict for a pair that never reached a solved `H`.
    pub fn from_error(err: &PoissonError) -> Self {
        let reason = match err {
            PoissonError::FeasibilityBreached { xi0, detail } => format!("psi_removable=false at xi = {xi0}: {detail}"),
            PoissonError::TailMass { .. } => format!("ratio_integrable=false: {err}"),
            other => other.to_string(),
        };
        Self {
            ratio_integrable: !matches!(err, PoissonError::TailMass { .. }),
            l1_ratio: f64::NAN,
            h_nonnegative: false,
            min_h: f64::NAN,
            max_h: f64::NAN,
            eps_neg: f64::NAN,
            h_integrable: false,
            integral_h: f64::NAN,
            psi_zero: f64::NAN,
            mean_check: None,
            residual_sup: f64::NAN,
            residual_ok: false,
            regularity_passed: None,
            verdict: Verdict::Rejected { reason },
        }
    }
}

pub fn check_feasibility(
    r: &RatioFunction,
    sol: &PoissonSolution,
    regularity: Option<&RegularityReport>,
    opts: &FeasibilityOptions,
) -> Feasibility {
    let d = &sol.diagnostics;
    let ratio_integrable = d.l1_ratio.is_finite() && d.l1_tail.verdict == TailVerdict::Converges;
    let scale = d.max_h.abs().max(d.min_h.abs());
    let eps_neg = opts.eps_neg_rel * scale;
    let h_nonnegative = d.min_h >= -eps_neg;
    let tails_ok = d.left_tail.integrable() && d.right_tail.integrable();
    let h_integrable = tails_ok && d.integral_h.is_finite() && d.integral_consistency <= opts.integral_tol * d.psi_zero.abs().max(1.0);
    let mean_check = mean_defect(r, d.integral_h);
    let residual_ok = d.residual_sup <= opts.residual_tol;
    let regularity_passed = regularity.map(|rep| rep.passed);

    let verdict = if !ratio_integrable {
        Verdict::Rejected { reason: format!("ratio_integrable=false: L1 norm of psi = {:.3e}", d.l1_ratio) }
    } else if !h_nonnegative {
        Verdict::Rejected { reason: format!("H_nonnegative=false: min H = {:.3e} < -{:.3e}", d.min_h, eps_neg) }
    } else if !h_integrable {
        Verdict::Rejected {
            reason: format!(
                "H_integrable=false: integral {:.6e} vs psi(0) {:.6e}, tail exponents {:.3}/{:.3}",
                d.integral_h, d.psi_zero, d.left_tail.exponent, d.right_tail.exponent
            ),
        }
    } else if matches!(mean_check, Some(m) if m > opts.mean_tol) {
        Verdict::Rejected { reason: format!("mean_check=false: mean identity off by {:.3e}", mean_check.unwrap()) }
    } else if !residual_ok {
        Verdict::Unverified { reason: format!("residual {:.3e} exceeds {:.1e}", d.residual_sup, opts.residual_tol) }
    } else if regularity_passed == Some(false) {
        Verdict::Unverified { reason: "regularity surrogates failed; see regularity report".into() }
    } else {
        Verdict::Accepted
    };
    Feasibility {
        ratio_integrable,
        l1_ratio: d.l1_ratio,
        h_nonnegative,
        min_h: d.min_h,
        max_h: d.max_h,
        eps_neg,
        h_integrable,
        integral_h: d.integral_h,
        psi_zero: d.psi_zero,
        mean_check,
        residual_sup: d.residual_sup,
        residual_ok,
        regularity_passed,
        verdict,
    }
}

/// `∫x g = κ₁ ∫H` since `𝒜x = κ₁`.
fn mean_defect(r: &RatioFunction, integral_h: f64) -> Option<f64> {
    let pair = r.pair();
    let dm = pair.h1.moments().mean()? - pair.h0.moments().mean()?;
    let kappa1 = r.exponent().triplet().cumulants()[0]?;
    Some((dm - kappa1 * integral_h).abs())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MomentReport {
    /// `∫g`, zero for any pair of probability densities.
    pub integral_g: f64,
    /// `∫x g`, when both means exist.
    pub first_moment_g: Option<f64>,
}

/// Moment identities of `g = h₁ - h₀` by quadrature.
pub fn check_moments(pair: &DensityPair) -> MomentReport {
    let opts = QuadOptions::with_tol(1e-12, 1e-10);
    let c = 0.5 * (pair.h0.center() + pair.h1.center());
    let integral_g = integrate_line(|x| pair.g(x), c, opts).value;
    let means = pair.h0.moments().mean().is_some() && pair.h1.moments().mean().is_some();
    let first_moment_g = means.then(|| integrate_line(|x| x * pair.g(x), c, opts).value);
    MomentReport { integral_g, first_moment_g }
}
