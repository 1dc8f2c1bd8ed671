//! Independent views of `H`: the `q`-resolvent limit and a Lipschitz bound.

use super::{PoissonError, RatioFunction};
use crate::density::DensityPair;
use crate::levy::{dyadic_tail, eta_eval, LevyTriplet, TailEstimate, TailVerdict};
use crate::quad::{integrate, integrate_breaks, QuadOptions};
use serde::Serialize;
use std::cell::RefCell;
use std::f64::consts::PI;

const FINITE_RATIO: f64 = 0.75;

/// `(U^q)*g(x) = (1/2π) ∫ ĝ(ξ) e^{-ixξ} / (q - η(ξ)) dξ`; its negative tends to `H(x)` as `q ↓ 0`.
pub fn resolvent_oracle(pair: &DensityPair, triplet: &LevyTriplet, q: f64, x: f64) -> Result<f64, PoissonError> {
    if q <= 0.0 {
        return Err(PoissonError::Invalid(format!("resolvent needs q > 0, got {q}")));
    }
    let width = pair.h0.core_scale().min(pair.h1.core_scale());
    let cutoff = 200.0 / width;
    // dyadic breaks resolve the sqrt(q)-wide peak of 1/(η - q) near the origin
    let mut pos = vec![0.0];
    let mut u = q.sqrt().min(cutoff);
    while u < cutoff {
        pos.push(u);
        u *= 2.0;
    }
    pos.push(cutoff);
    let mut breaks: Vec<f64> = pos.iter().rev().map(|p| -p).collect();
    breaks.extend(pos.iter().skip(1));
    let err = RefCell::new(None);
    let f = |xi: f64| match eta_eval(triplet, xi) {
        Ok(eta) => {
            let v = pair.g_hat(xi) * num_complex::Complex64::from_polar(1.0, -x * xi) / (q - eta);
            v.re
        }
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let res = integrate_breaks(f, &breaks, QuadOptions { abs_tol: 1e-13, rel_tol: 1e-11, max_intervals: 8000 });
    if let Some(e) = err.into_inner() {
        return Err(e.into());
    }
    Ok(res.value / (2.0 * PI))
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    /// `∫|ξ||ψ(ξ)| dξ` over the line.
    pub weighted_l1: f64,
    /// `weighted_l1 / 2π`, a bound on `sup|H'|` when finite.
    pub bound: f64,
    pub tail: TailEstimate,
    /// `finite` or `not established`.
    pub status: String,
}

/// Bound on the Lipschitz constant of `H` from the first absolute moment of `ψ`.
pub fn lipschitz_diag(r: &RatioFunction) -> Result<LipschitzReport, PoissonError> {
    let start = 4.0 * r.xi_scale();
    let tabulated = r.pair().h0.is_tabulated() || r.pair().h1.is_tabulated();
    let max_upper = start * if tabulated { 2f64.powi(10) } else { 2f64.powi(40) };
    let err = RefCell::new(None);
    let weighted = |xi: f64| match (r.eval(xi), r.eval(-xi)) {
        (Ok(p), Ok(m)) => xi * (p.norm() + m.norm()),
        (Err(e), _) | (_, Err(e)) => {
            err.borrow_mut().get_or_insert(e.to_string());
            f64::NAN
        }
    };
    let opts = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-8, max_intervals: 4000 };
    let core = integrate(weighted, 0.0, start, opts).value;
    let tail = dyadic_tail(|a, b| Ok(integrate(weighted, a, b, opts).value), start, max_upper)?;
    if let Some(e) = err.into_inner() {
        return Err(PoissonError::Invalid(e));
    }
    let finite = tail.verdict == TailVerdict::Converges && tail.increment_ratio <= FINITE_RATIO;
    let total = core + tail.value;
    Ok(LipschitzReport {
        weighted_l1: total,
        bound: total / (2.0 * PI),
        tail,
        status: if finite { "finite" } else { "not established" }.into(),
    })
}
