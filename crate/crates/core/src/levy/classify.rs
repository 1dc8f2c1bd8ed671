use super::{CharExponent, ClosedForm, LevyError, LevyTriplet};
use crate::numeric::golden_min;
use crate::quad::{integrate, QuadOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProcessType {
    S,
    Zero,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailVerdict {
    Converges,
    Diverges,
    Inconclusive,
}

/// Outcome of summing an improper integral over dyadic blocks `[U, 2U]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub value: f64,
    pub extrapolated_tail: f64,
    pub last_increment: f64,
    pub increment_ratio: f64,
    pub upper_limit: f64,
    pub verdict: TailVerdict,
}

const TAIL_STOP: f64 = 1e-8;
const TAIL_MAX: f64 = 1e8;
const PLATEAU: f64 = 1e-4;
const GEOMETRIC_RATIO: f64 = 0.98;

/// Sums `block(U)` = ∫_U^{2U} for U = start, 2·start, ... with the
/// stopping rules used for the type-S tail test.
pub(crate) fn dyadic_tail<F: FnMut(f64, f64) -> Result<f64, LevyError>>(
    mut block: F,
    start: f64,
    max_upper: f64,
) -> Result<TailEstimate, LevyError> {
    let mut total = 0.0;
    let mut u = start;
    let mut incs: Vec<f64> = Vec::new();
    loop {
        let inc = block(u, 2.0 * u)?;
        if !inc.is_finite() {
            return Ok(TailEstimate {
                value: f64::INFINITY,
                extrapolated_tail: f64::INFINITY,
                last_increment: inc,
                increment_ratio: f64::INFINITY,
                upper_limit: 2.0 * u,
                verdict: TailVerdict::Diverges,
            });
        }
        total += inc;
        incs.push(inc);
        u *= 2.0;
        if inc < TAIL_STOP || u > max_upper {
            break;
        }
    }
    let last = *incs.last().unwrap();
    // geometric decay over the last few blocks predicts the remainder
    let ratio = if incs.len() >= 3 {
        let n = incs.len();
        let r1 = incs[n - 1] / incs[n - 2].max(f64::MIN_POSITIVE);
        let r2 = incs[n - 2] / incs[n - 3].max(f64::MIN_POSITIVE);
        r1.max(r2)
    } else if incs.len() == 2 {
        incs[1] / incs[0].max(f64::MIN_POSITIVE)
    } else {
        0.0
    };
    let (verdict, extra) = if last < TAIL_STOP {
        let extra = if ratio < 1.0 { last * ratio / (1.0 - ratio) } else { 0.0 };
        (TailVerdict::Converges, extra)
    } else if ratio < GEOMETRIC_RATIO {
        (TailVerdict::Converges, last * ratio / (1.0 - ratio))
    } else if last >= PLATEAU {
        (TailVerdict::Diverges, f64::INFINITY)
    } else {
        (TailVerdict::Inconclusive, f64::NAN)
    };
    Ok(TailEstimate {
        value: total + if extra.is_finite() { extra } else { 0.0 },
        extrapolated_tail: extra,
        last_increment: last,
        increment_ratio: ratio,
        upper_limit: u,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassEvidence {
    pub symmetric: bool,
    pub symmetry_residual: f64,
    /// `∫_1^∞ 1/|η|`, only evaluated for symmetric triplets.
    pub tail_integral: Option<TailEstimate>,
    pub liminf_estimate: f64,
    /// Smallest |η| on the log grid restricted to each decade `[10^k, 10^{k+1}]`, k = 0..5.
    pub decade_minima: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessClass {
    pub tag: ProcessType,
    pub evidence: ClassEvidence,
    pub low_confidence: bool,
    pub notes: Vec<String>,
}

const LIMINF_THRESHOLD: f64 = 1e-6;
const LOG_GRID_MAX: f64 = 1e6;

pub fn classify(triplet: &LevyTriplet) -> Result<ProcessClass, LevyError> {
    let exp = CharExponent::new(triplet)?;
    let cheap = exp.closed_form().is_some();
    let mut notes = Vec::new();
    let mut low_confidence = false;

    let symmetry_residual = symmetry_residual(&exp, cheap)?;
    let symmetric = triplet.is_symmetric();

    let tail_integral = if symmetric {
        let est = dyadic_tail(
            |a, b| {
                let r = integrate(
                    |u: f64| {
                        let m = exp.eval(u).map(|e| e.norm()).unwrap_or(f64::NAN);
                        if m > 0.0 { 1.0 / m } else { f64::INFINITY }
                    },
                    a,
                    b,
                    QuadOptions { abs_tol: 1e-12, rel_tol: 1e-9, max_intervals: 400 },
                );
                Ok(if r.converged { r.value } else { f64::INFINITY })
            },
            1.0,
            TAIL_MAX,
        )?;
        Some(est)
    } else {
        None
    };

    let (liminf_estimate, decade_minima) = liminf_estimate(&exp, triplet, cheap)?;

    let tag = match tail_integral.map(|t| t.verdict) {
        Some(TailVerdict::Converges) => ProcessType::S,
        other => {
            if other == Some(TailVerdict::Inconclusive) {
                low_confidence = true;
                notes.push("tail integral of 1/|eta| inconclusive; type S not established".into());
            }
            if liminf_estimate > LIMINF_THRESHOLD {
                ProcessType::Zero
            } else {
                ProcessType::D
            }
        }
    };
    if tag != ProcessType::S {
        // a shrinking decade minimum suggests liminf may be zero beyond the sampled range
        let first = decade_minima.iter().cloned().take(3).fold(f64::INFINITY, f64::min);
        let last = decade_minima.last().copied().unwrap_or(f64::INFINITY);
        if tag == ProcessType::Zero && last < 0.1 * first && last < 1e-2 {
            low_confidence = true;
            notes.push("decade minima of |eta| decrease; liminf may vanish beyond the sampled range".into());
        }
    }
    Ok(ProcessClass {
        tag,
        evidence: ClassEvidence { symmetric, symmetry_residual, tail_integral, liminf_estimate, decade_minima },
        low_confidence,
        notes,
    })
}

fn symmetry_residual(exp: &CharExponent, cheap: bool) -> Result<f64, LevyError> {
    let n = if cheap { 200 } else { 24 };
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let u = 10f64.powf(-2.0 + 5.0 * k as f64 / (n - 1) as f64);
        let e = exp.eval(u)?;
        worst = worst.max(e.im.abs() / (1.0 + e.norm()));
    }
    Ok(worst)
}

fn liminf_estimate(exp: &CharExponent, triplet: &LevyTriplet, cheap: bool) -> Result<(f64, Vec<f64>), LevyError> {
    let n_log = if cheap { 20_001 } else { 601 };
    let mut samples = Vec::with_capacity(2 * n_log);
    for k in 0..n_log {
        let u = 10f64.powf(LOG_GRID_MAX.log10() * k as f64 / (n_log - 1) as f64);
        let m = exp.eval(u)?.norm().min(exp.eval(-u)?.norm());
        samples.push((u, m));
    }
    // running minimum from the top of the grid
    let mut running = vec![0.0; samples.len()];
    let mut acc = f64::INFINITY;
    for (i, &(_, m)) in samples.iter().enumerate().rev() {
        acc = acc.min(m);
        running[i] = acc;
    }
    let decade_minima: Vec<f64> = (0..6)
        .map(|d| {
            let (lo, hi) = (10f64.powi(d), 10f64.powi(d + 1));
            samples.iter().filter(|(u, _)| *u >= lo && *u <= hi).map(|s| s.1).fold(f64::INFINITY, f64::min)
        })
        .collect();
    let tail_start = samples.partition_point(|s| s.0 < 1e4);
    let mut estimate = running[tail_start.min(samples.len() - 1)];

    // fine linear window: the log grid is far too coarse to hit lattice zeros
    let reach = match (&triplet.nu, exp.closed_form()) {
        (super::JumpMeasure::FiniteAtoms { atoms }, _) => atoms.iter().map(|a| a.location.abs()).fold(0.0, f64::max),
        (super::JumpMeasure::TabulatedDensity { grid, .. }, _) => grid.iter().map(|g| g.abs()).fold(0.0, f64::max),
        (_, Some(ClosedForm::Gaussian)) => 1.0,
        _ => 1.0,
    };
    let step = (0.02 / reach.max(1e-3)).min(0.01);
    let n_lin = if cheap { 20_000 } else { 400 };
    let start = 1e3;
    let mut prev2 = f64::INFINITY;
    let mut prev1 = exp.eval(start)?.norm();
    let mut minima: Vec<(f64, f64)> = Vec::new();
    for k in 1..=n_lin {
        let u = start + step * k as f64;
        let m = exp.eval(u)?.norm();
        if prev1 <= prev2 && prev1 <= m {
            minima.push((u - step, prev1));
        }
        prev2 = prev1;
        prev1 = m;
    }
    minima.sort_by(|a, b| a.1.total_cmp(&b.1));
    for &(u0, m0) in minima.iter().take(20) {
        let (_, refined) = golden_min(|u| exp.eval(u).map(|e| e.norm()).unwrap_or(f64::INFINITY), u0 - step, u0 + step, 200);
        estimate = estimate.min(refined.min(m0));
    }
    Ok((estimate, decade_minima))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Type0Evidence {
    /// Estimate of `∫ Re(1/(1-η(ξ))) dξ` over the line.
    pub integral: TailEstimate,
    /// Condition (i) of the type-0 sufficient criterion.
    pub condition_i: TailVerdict,
    /// Condition (ii) is supplied by the caller; it is not checked numerically.
    pub condition_ii_asserted: Option<bool>,
}

/// Diagnostic only: never changes a classification.
pub fn type0_sufficient_check(triplet: &LevyTriplet) -> Result<Type0Evidence, LevyError> {
    let exp = CharExponent::new(triplet)?;
    let integrand = |x: f64| {
        let e = exp.eval(x).unwrap_or(num_complex::Complex64::new(f64::NAN, 0.0));
        (1.0 / (1.0 - e)).re
    };
    let opts = QuadOptions { abs_tol: 1e-12, rel_tol: 1e-10, max_intervals: 2000 };
    let core = integrate(integrand, -1.0, 1.0, opts);
    if !core.converged {
        return Err(LevyError::Quadrature { achieved: core.error, lo: core.worst.0, hi: core.worst.1 });
    }
    let tail = dyadic_tail(
        |a, b| {
            let lo = integrate(integrand, -b, -a, opts);
            let hi = integrate(integrand, a, b, opts);
            Ok(lo.value + hi.value)
        },
        1.0,
        1e6,
    )?;
    let integral = TailEstimate { value: core.value + tail.value, ..tail };
    Ok(Type0Evidence { condition_i: integral.verdict, integral, condition_ii_asserted: None })
}
