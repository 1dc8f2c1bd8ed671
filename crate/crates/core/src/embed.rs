//! The pathwise clock: `G`, `I`, `Δ`, the stopping time `τ`, the schedule `δ(s)`
//! and the ε-regularized variants.

use crate::density::DensityPair;
use crate::numeric::{bisect_first, exprel};
use crate::pathsim::Segment;
use crate::poisson::PoissonSolution;
use num_complex::Complex64;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("regularization needs epsilon in (0, 1), got {0}")]
    Epsilon(f64),
    #[error("regularization needs a positive potential mass, got {0}")]
    Degenerate(f64),
}

/// Exhaustion threshold relative to `max H`.
pub const RHO_THRESHOLD: f64 = 1e-9;
/// Per-sub-step caps on `ΔI` and `|ΔG|`.
pub const SUBSTEP_CAP: f64 = 0.01;
const BISECT_REL_TOL: f64 = 1e-10;

/// `H` together with the densities it connects, optionally ε-regularized.
#[derive(Debug, Clone)]
pub struct SpeedField {
    solution: Arc<PoissonSolution>,
    pair: DensityPair,
    epsilon: f64,
    /// `C = ∫H` of the unregularized potential.
    mass: f64,
    eps_h: f64,
    p_sampler: Option<Arc<PotentialSampler>>,
}

/// Clock rates at a frozen state: `a = (h₁ - h₀)/H`, `b = h₁/H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub a: f64,
    pub b: f64,
}

impl SpeedField {
    pub fn new(solution: PoissonSolution, pair: DensityPair) -> Self {
        let scale = solution.max_h().abs().max(solution.min_h().abs());
        let mass = solution.integral_h();
        Self { solution: Arc::new(solution), pair, epsilon: 0.0, mass, eps_h: RHO_THRESHOLD * scale, p_sampler: None }
    }

    /// `h_i^ε = (1-ε)h_i + εH/C`, `H^ε = (1-ε)H`.
    pub fn regularize(&self, epsilon: f64) -> Result<SpeedField, EmbedError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(EmbedError::Epsilon(epsilon));
        }
        if !(self.mass > 0.0) {
            return Err(EmbedError::Degenerate(self.mass));
        }
        let sampler = PotentialSampler::new(&self.solution);
        Ok(SpeedField { epsilon, p_sampler: Some(Arc::new(sampler)), ..self.clone() })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn pair(&self) -> &DensityPair {
        &self.pair
    }

    pub fn solution(&self) -> &PoissonSolution {
        &self.solution
    }

    /// `∫H^ε = (1-ε)C`.
    pub fn integral_h(&self) -> f64 {
        (1.0 - self.epsilon) * self.mass
    }

    pub fn raw_mass(&self) -> f64 {
        self.mass
    }

    pub fn rho_threshold(&self) -> f64 {
        self.eps_h
    }

    pub fn h(&self, x: f64) -> f64 {
        (1.0 - self.epsilon) * self.solution.eval(x)
    }

    fn p(&self, x: f64) -> f64 {
        self.solution.eval(x).max(0.0) / self.mass
    }

    pub fn h0(&self, x: f64) -> f64 {
        let v = self.pair.h0.pdf(x);
        if self.epsilon == 0.0 {
            v
        } else {
            (1.0 - self.epsilon) * v + self.epsilon * self.p(x)
        }
    }

    pub fn h1(&self, x: f64) -> f64 {
        let v = self.pair.h1.pdf(x);
        if self.epsilon == 0.0 {
            v
        } else {
            (1.0 - self.epsilon) * v + self.epsilon * self.p(x)
        }
    }

    pub fn phi(&self, t: f64, x: f64) -> f64 {
        (1.0 - t) * self.h0(x) + t * self.h1(x)
    }

    /// CDF of `φ(t,·)`.
    pub fn phi_cdf(&self, t: f64, x: f64) -> f64 {
        let base = self.pair.phi_cdf(t, x);
        match &self.p_sampler {
            Some(p) => (1.0 - self.epsilon) * base + self.epsilon * p.cdf(x),
            None => base,
        }
    }

    /// Local speed `σ(t,x) = H(x)/φ(t,x)`.
    pub fn sigma(&self, t: f64, x: f64) -> f64 {
        self.h(x) / self.phi(t, x)
    }

    /// `None` once `H(x)` has dropped to the exhaustion threshold.
    pub fn rates(&self, x: f64) -> Option<Rates> {
        let raw = self.solution.eval(x);
        if !(raw > self.eps_h) {
            return None;
        }
        let (h0, h1) = (self.pair.h0.pdf(x), self.pair.h1.pdf(x));
        if self.epsilon == 0.0 {
            return Some(Rates { a: (h1 - h0) / raw, b: h1 / raw });
        }
        let e = self.epsilon;
        let hr = (1.0 - e) * raw;
        let p = raw / self.mass;
        let (h0e, h1e) = ((1.0 - e) * h0 + e * p, (1.0 - e) * h1 + e * p);
        Some(Rates { a: (h1e - h0e) / hr, b: h1e / hr })
    }

    /// Draw from the (regularized) initial law.
    pub fn sample_initial<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.p_sampler {
            Some(p) if rng.random::<f64>() < self.epsilon => p.sample(rng),
            _ => self.pair.h0.sample(rng),
        }
    }
}

/// Inverse-CDF sampler for `p = H⁺/∫H⁺` from the grid values and power tails.
#[derive(Debug)]
struct PotentialSampler {
    x0: f64,
    dx: f64,
    center: f64,
    edge: f64,
    values: Vec<f64>,
    cum: Vec<f64>,
    left: (f64, f64),
    right: (f64, f64),
}

impl PotentialSampler {
    fn new(sol: &PoissonSolution) -> Self {
        let g = sol.grid();
        let values: Vec<f64> = sol.values().iter().map(|v| v.max(0.0)).collect();
        let mut cum = Vec::with_capacity(values.len());
        let tail = |t: &crate::poisson::PowerTail| if t.fitted && t.exponent > 1.0 { (t.mass(), t.exponent) } else { (0.0, 0.0) };
        let left = tail(&sol.diagnostics.left_tail);
        let right = tail(&sol.diagnostics.right_tail);
        let mut acc = left.0;
        cum.push(acc);
        for w in values.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * g.dx;
            cum.push(acc);
        }
        Self { x0: g.x_min(), dx: g.dx, center: g.center, edge: g.half_width, values, cum, left, right }
    }

    fn total(&self) -> f64 {
        self.cum.last().unwrap() + self.right.0
    }

    fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = (self.center - self.edge, self.center + self.edge);
        let mass = if x <= lo {
            if self.left.0 == 0.0 { 0.0 } else { self.left.0 * ((self.center - x) / self.edge).powf(1.0 - self.left.1) }
        } else if x >= hi {
            let last = *self.cum.last().unwrap();
            last + if self.right.0 == 0.0 { 0.0 } else { self.right.0 * (1.0 - ((x - self.center) / self.edge).powf(1.0 - self.right.1)) }
        } else {
            let f = ((x - self.x0) / self.dx).clamp(0.0, (self.values.len() - 1) as f64);
            let i = (f.floor() as usize).min(self.values.len() - 2);
            let s = (x - self.x0 - self.dx * i as f64).clamp(0.0, self.dx);
            let (v0, v1) = (self.values[i], self.values[i + 1]);
            self.cum[i] + v0 * s + 0.5 * (v1 - v0) / self.dx * s * s
        };
        (mass / self.total()).clamp(0.0, 1.0)
    }

    fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = self.cum.last().unwrap() + self.right.0;
        let target = rng.random::<f64>() * total;
        let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        if target < self.left.0 {
            return self.center - self.edge * u.powf(-1.0 / (self.left.1 - 1.0));
        }
        let last = *self.cum.last().unwrap();
        if target >= last {
            return self.center + self.edge * u.powf(-1.0 / (self.right.1 - 1.0));
        }
        let i = self.cum.partition_point(|&c| c <= target).clamp(1, self.values.len() - 1);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        let m = target - self.cum[i - 1];
        let a = 0.5 * (v1 - v0) / self.dx;
        let disc = (v0 * v0 + 4.0 * a * m).max(0.0);
        let s = if v0 + disc.sqrt() > 0.0 { 2.0 * m / (v0 + disc.sqrt()) } else { 0.5 * self.dx };
        self.x0 + self.dx * (i - 1) as f64 + s.clamp(0.0, self.dx)
    }
}

/// Clock accumulators along one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClockState {
    pub t: f64,
    /// `G(t) = ∫₀ᵗ (h₁ - h₀)/H (L_r) dr`.
    pub g: f64,
    /// `I(t) = ∫₀ᵗ e^{-G(r)} h₁/H (L_r) dr`.
    pub i: f64,
    /// `Δ(t)` advanced by its own linear ODE `Δ' = aΔ + b - a`.
    pub delta: f64,
    /// `∫₀ᵗ e^{-G(r)} dr`.
    pub j: f64,
    pub exhausted: bool,
}

impl ClockState {
    pub fn start() -> Self {
        Self { t: 0.0, g: 0.0, i: 0.0, delta: 0.0, j: 0.0, exhausted: false }
    }

    /// `1 - e^{G}(1 - I)`.
    pub fn delta_from_gi(&self) -> f64 {
        1.0 - self.g.exp() * (1.0 - self.i)
    }

    /// State after `r` more time units at constant rates.
    fn advance(&self, rates: Rates, r: f64) -> Self {
        let Rates { a, b } = rates;
        let e = (-self.g).exp();
        Self {
            t: self.t + r,
            g: self.g + a * r,
            i: self.i + b * e * r * exprel(-a * r),
            delta: self.delta * (a * r).exp() + (b - a) * r * exprel(a * r),
            j: self.j + e * r * exprel(-a * r),
            exhausted: false,
        }
    }

    /// Level test: `I ≥ 1` for `s = 1`, `Δ ≥ s` below it.
    fn reached(&self, s: f64) -> bool {
        if s >= 1.0 {
            self.i >= 1.0
        } else {
            self.delta >= s
        }
    }
}

/// Advance the clock over `[state.t, t1]` with the path frozen at `x`, split into
/// sub-steps with `ΔI ≤ 0.01` and `|ΔG| ≤ 0.01`. Exhaustion latches at `state.t`.
pub fn step_clock(field: &SpeedField, state: &ClockState, t1: f64, x: f64) -> ClockState {
    if state.exhausted {
        return *state;
    }
    let Some(rates) = field.rates(x) else {
        return ClockState { exhausted: true, ..*state };
    };
    let mut s = *state;
    for h in substeps(&s, rates, t1 - s.t) {
        s = s.advance(rates, h);
    }
    s.t = t1;
    s
}

fn substeps(s: &ClockState, rates: Rates, span: f64) -> impl Iterator<Item = f64> {
    let di = rates.b * (-s.g).exp() * span;
    let dg = rates.a.abs() * span;
    let n = ((di.max(dg) / SUBSTEP_CAP).ceil() as usize).clamp(1, 1 << 20);
    let h = span / n as f64;
    (0..n).map(move |_| h)
}

/// Level crossing of a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleHit {
    pub s: f64,
    pub time: f64,
    pub state: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingOutcome {
    pub tau: f64,
    pub l_tau: f64,
    pub hit_rho: bool,
    pub censored: bool,
    pub steps: u64,
    pub max_integrand: f64,
    /// `δ(s)` for the requested levels below 1, in request order.
    pub schedule: Vec<ScheduleHit>,
    /// `∫₀^τ e^{iuL_r} dr` per probe.
    pub dynkin: Vec<Complex64>,
    /// Largest `|Δ - (1 - e^G(1 - I))|` seen at a step end.
    pub identity_defect: f64,
    pub final_state: ClockState,
}

/// What to record besides `τ`.
#[derive(Debug, Clone, Default)]
pub struct ClockRequest {
    pub levels: Vec<f64>,
    pub probes: Vec<f64>,
    /// Hand the clock state to the trace callback after every segment.
    pub trace: bool,
}

/// Run the clock along `segments` until `I ≥ 1`, exhaustion, or the stream ends.
pub fn run_clock<S: IntoIterator<Item = Segment>>(
    field: &SpeedField,
    segments: S,
    request: &ClockRequest,
    mut trace: impl FnMut(&ClockState),
) -> EmbeddingOutcome {
    let mut st = ClockState::start();
    let mut out = EmbeddingOutcome {
        tau: 0.0,
        l_tau: f64::NAN,
        hit_rho: false,
        censored: false,
        steps: 0,
        max_integrand: 0.0,
        schedule: Vec::new(),
        dynkin: vec![Complex64::new(0.0, 0.0); request.probes.len()],
        identity_defect: 0.0,
        final_state: st,
    };
    let below: Vec<f64> = request.levels.iter().copied().filter(|&s| s < 1.0).collect();
    let mut hits: Vec<Option<ScheduleHit>> = vec![None; below.len()];
    let mut last_state = f64::NAN;

    for seg in segments {
        out.steps += 1;
        let span = seg.t1 - seg.t0;
        let x_start = seg.x0;
        let Some(r0) = field.rates(x_start) else {
            return finish_rho(out, st, x_start, &request.levels, hits);
        };
        let continuous = seg.continuous != 0.0;
        let n = if continuous { substeps(&st, r0, span).count() } else { 1 };
        let h_sub = span / n as f64;
        for k in 0..n {
            let x = if continuous { seg.state_at(seg.t0 + (k as f64 + 0.5) * h_sub) } else { x_start };
            let Some(rates) = field.rates(x) else {
                return finish_rho(out, st, x, &request.levels, hits);
            };
            out.max_integrand = out.max_integrand.max(rates.b);
            for h in substeps(&st, rates, h_sub) {
                let next = st.advance(rates, h);
                // schedule levels crossed inside this sub-step
                for (hit, &s) in hits.iter_mut().zip(&below) {
                    if hit.is_none() && next.reached(s) {
                        let r = if st.reached(s) { 0.0 } else { crossing(&st, rates, h, s) };
                        *hit = Some(ScheduleHit { s, time: st.t + r, state: seg.state_at(st.t + r) });
                    }
                }
                if next.reached(1.0) {
                    let r = crossing(&st, rates, h, 1.0);
                    for (p, d) in request.probes.iter().zip(out.dynkin.iter_mut()) {
                        *d += Complex64::from_polar(1.0, p * x) * r;
                    }
                    st = st.advance(rates, r);
                    out.tau = st.t;
                    out.l_tau = seg.state_at(st.t);
                    out.final_state = st;
                    out.schedule = close_schedule(&request.levels, hits, out.tau, out.l_tau);
                    return out;
                }
                for (p, d) in request.probes.iter().zip(out.dynkin.iter_mut()) {
                    *d += Complex64::from_polar(1.0, p * x) * h;
                }
                st = next;
            }
        }
        st.t = seg.t1;
        out.identity_defect = out.identity_defect.max((st.delta - st.delta_from_gi()).abs());
        if request.trace {
            trace(&st);
        }
        last_state = seg.end_state();
    }
    out.censored = true;
    out.tau = st.t;
    out.l_tau = last_state;
    out.final_state = st;
    out.schedule = close_schedule(&request.levels, hits, f64::NAN, f64::NAN);
    out
}

fn finish_rho(
    mut out: EmbeddingOutcome,
    st: ClockState,
    x: f64,
    levels: &[f64],
    hits: Vec<Option<ScheduleHit>>,
) -> EmbeddingOutcome {
    out.hit_rho = true;
    out.tau = st.t;
    out.l_tau = x;
    out.final_state = ClockState { exhausted: true, ..st };
    out.schedule = close_schedule(levels, hits, st.t, x);
    out
}

/// Levels not crossed before `τ` (or `ρ`) take `τ` itself.
fn close_schedule(levels: &[f64], hits: Vec<Option<ScheduleHit>>, tau: f64, x: f64) -> Vec<ScheduleHit> {
    let mut hits = hits.into_iter();
    levels
        .iter()
        .filter(|&&s| s < 1.0)
        .map(|&s| hits.next().flatten().unwrap_or(ScheduleHit { s, time: tau, state: x }))
        .collect()
}

/// Smallest `r ∈ (0, h]` at which level `s` is reached, by bisection on the exact sub-step.
fn crossing(st: &ClockState, rates: Rates, h: f64, s: f64) -> f64 {
    let tol = BISECT_REL_TOL * (st.t + h).max(f64::MIN_POSITIVE);
    bisect_first(|r| st.advance(rates, r).reached(s), 0.0, h, tol)
}

/// `τ` along a path.
pub fn stop_time<S: IntoIterator<Item = Segment>>(segments: S, field: &SpeedField) -> EmbeddingOutcome {
    run_clock(field, segments, &ClockRequest::default(), |_| {})
}

/// `δ(s)` along a path; `δ(1)` is `τ`.
pub fn delta_schedule<S: IntoIterator<Item = Segment>>(segments: S, field: &SpeedField, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let out = run_clock(field, segments, &ClockRequest { levels: vec![s], ..Default::default() }, |_| {});
    if s >= 1.0 {
        out.tau
    } else {
        out.schedule[0].time
    }
}

/// A path held at `x` on `[0, t_max]`, cut into steps of `dt`.
pub fn frozen_path(x: f64, dt: f64, t_max: f64) -> impl Iterator<Item = Segment> {
    let n = (t_max / dt).ceil() as usize;
    (0..n).map(move |k| {
        let t0 = k as f64 * dt;
        Segment { t0, t1: ((k + 1) as f64 * dt).min(t_max), x0: x, continuous: 0.0, jump: 0.0, had_jump: false }
    })
}

/// Outcomes CSV with columns `path_id,tau,L_tau,hit_rho,censored`.
pub fn write_outcomes_csv(outcomes: &[EmbeddingOutcome], path: &Path) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "path_id,tau,L_tau,hit_rho,censored")?;
    for (k, o) in outcomes.iter().enumerate() {
        writeln!(w, "{k},{},{},{},{}", o.tau, o.l_tau, u8::from(o.hit_rho), u8::from(o.censored))?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DensitySpec;
    use crate::levy::LevyTriplet;
    use crate::pathsim::{path_rng, IncrementSampler, PathConfig, PathStream};
    use crate::poisson::{solve_h, GridParams, RatioFunction};
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn field_for(h0: DensitySpec, h1: DensitySpec) -> SpeedField {
        let pair = DensityPair::from_specs(h0, h1).unwrap();
        let r = RatioFunction::new(pair.clone(), &LevyTriplet::brownian(1.0)).unwrap();
        SpeedField::new(solve_h(&r, &GridParams::default()).unwrap(), pair)
    }

    fn bm_field() -> &'static SpeedField {
        static F: OnceLock<SpeedField> = OnceLock::new();
        F.get_or_init(|| field_for(DensitySpec::gaussian(0.0, 1.0), DensitySpec::gaussian(0.0, 2.0)))
    }

    fn bm_paths(field: &SpeedField, index: u64) -> Vec<Segment> {
        let sampler = IncrementSampler::new(&LevyTriplet::brownian(1.0), 0.1).unwrap();
        let cfg = PathConfig { dt_base: 1e-3, t_max: 20.0, seed: 11, ..Default::default() };
        let mut rng = path_rng(cfg.seed, index);
        let x0 = field.sample_initial(&mut rng);
        PathStream::new(&sampler, x0, rng, &cfg).collect()
    }

    fn trace_of(field: &SpeedField, segs: &[Segment]) -> Vec<ClockState> {
        let mut states = Vec::new();
        let req = ClockRequest { trace: true, ..Default::default() };
        run_clock(field, segs.iter().copied(), &req, |s| states.push(*s));
        states
    }

    #[test]
    fn frozen_origin_matches_scalar_ode() {
        let f = bm_field();
        let (h0, h1, hh) = (f.h0(0.0), f.h1(0.0), f.h(0.0));
        // N(0,1) -> N(0,2) at the origin
        assert!((h0 - (2.0 * std::f64::consts::PI).sqrt().recip()).abs() < 1e-15);
        let (a, b) = ((h1 - h0) / hh, h1 / hh);
        let mut st = ClockState::start();
        for seg in frozen_path(0.0, 1e-3, 0.1) {
            st = step_clock(f, &st, seg.t1, seg.x0);
        }
        let t = 0.1;
        let g = a * t;
        let i = -b * (-a * t).exp_m1() / a;
        assert!((st.t - t).abs() < 1e-15);
        assert!((st.g - g).abs() < 1e-8, "{} {g}", st.g);
        assert!((st.i - i).abs() < 1e-8, "{} {i}", st.i);
        assert!((st.delta - (1.0 - g.exp() * (1.0 - i))).abs() < 1e-8);
    }

    #[test]
    fn constant_state_moves_g_exactly() {
        let f = bm_field();
        let x = 0.7;
        let st = step_clock(f, &ClockState::start(), 0.05, x);
        let want = 0.05 * (f.h1(x) - f.h0(x)) / f.h(x);
        assert!((st.g - want).abs() < 1e-15 * want.abs().max(1.0));
    }

    #[test]
    fn identical_pair_stops_at_once() {
        let f = field_for(DensitySpec::gaussian(0.0, 1.0), DensitySpec::gaussian(0.0, 1.0));
        let out = stop_time(frozen_path(0.4, 1e-3, 1.0), &f);
        assert!(out.hit_rho && !out.censored);
        assert_eq!(out.tau, 0.0);
        assert_eq!(out.l_tau, 0.4);
        let st = step_clock(&f, &ClockState::start(), 0.1, 0.4);
        assert!(st.exhausted);
        assert_eq!(step_clock(&f, &st, 0.2, 0.0), st);
    }

    #[test]
    fn stop_time_lands_on_unit_trigger() {
        let f = bm_field();
        for k in 0..8 {
            let out = stop_time(bm_paths(f, k), f);
            assert!(!out.censored && !out.hit_rho, "{out:?}");
            assert!((out.final_state.i - 1.0).abs() < 1e-9, "{}", out.final_state.i);
            assert!(out.identity_defect < 1e-10, "{}", out.identity_defect);
        }
    }

    #[test]
    fn schedule_endpoints_and_order() {
        let f = bm_field();
        for k in 0..8 {
            let segs = bm_paths(f, k);
            let tau = stop_time(segs.iter().copied(), f).tau;
            assert_eq!(delta_schedule(segs.iter().copied(), f, 0.0), 0.0);
            assert_eq!(delta_schedule(segs.iter().copied(), f, 1.0), tau);
            let d25 = delta_schedule(segs.iter().copied(), f, 0.25);
            let d50 = delta_schedule(segs.iter().copied(), f, 0.5);
            assert!(d25 <= d50 && d50 <= tau, "{d25} {d50} {tau}");
        }
    }

    #[test]
    fn regularized_clock_decomposes() {
        let f = bm_field();
        let eps = 0.1;
        let fe = f.regularize(eps).unwrap();
        let c = f.raw_mass();
        assert!((c - 1.0).abs() < 1e-6);
        for k in 0..4 {
            let segs = bm_paths(f, k);
            let (plain, reg) = (trace_of(f, &segs), trace_of(&fe, &segs));
            for (p, r) in plain.iter().zip(&reg) {
                assert!((p.g - r.g).abs() < 1e-12 * p.g.abs().max(1.0));
                let want = p.delta + eps / ((1.0 - eps) * c) * p.g.exp() * p.j;
                assert!((r.delta - want).abs() < 1e-8, "{} {want}", r.delta);
            }
        }
    }

    #[test]
    fn larger_epsilon_stops_sooner() {
        let f = bm_field();
        let fields: Vec<SpeedField> = [0.02, 0.1, 0.3].iter().map(|&e| f.regularize(e).unwrap()).collect();
        for x in [-2.0, -0.5, 0.0, 1.3, 3.0] {
            for s in [0.25, 0.5, 1.0] {
                let d: Vec<f64> = fields.iter().map(|fe| delta_schedule(frozen_path(x, 1e-2, 50.0), fe, s)).collect();
                assert!(d[0] >= d[1] && d[1] >= d[2], "x={x} s={s} {d:?}");
            }
        }
    }

    #[test]
    fn regularized_speed_is_bounded() {
        let f = bm_field();
        let eps = 0.2;
        let fe = f.regularize(eps).unwrap();
        let bound = (1.0 - eps) * f.raw_mass() / eps;
        for k in -200..=200 {
            let x = k as f64 * 0.1;
            for t in [0.0, 0.5, 1.0] {
                assert!(fe.sigma(t, x) <= bound * (1.0 + 1e-9));
                assert!((fe.h0(x) - f.h0(x)).abs() <= eps * (f.p(x) + f.h0(x)) + 1e-15);
            }
        }
        assert!(matches!(f.regularize(0.0), Err(EmbedError::Epsilon(_))));
        let flat = field_for(DensitySpec::gaussian(0.0, 1.0), DensitySpec::gaussian(0.0, 1.0));
        assert!(matches!(flat.regularize(0.1), Err(EmbedError::Degenerate(_))));
    }

    #[test]
    fn potential_sampler_tracks_h() {
        let f = bm_field();
        let fe = f.regularize(0.999_999).unwrap();
        let mut rng = path_rng(3, 0);
        let n = 20000;
        let below = (0..n).filter(|_| fe.sample_initial(&mut rng) <= 0.5).count() as f64 / n as f64;
        let want = crate::quad::integrate(|x| f.p(x), -40.0, 0.5, crate::quad::QuadOptions::with_tol(1e-12, 1e-10)).value;
        let p = fe.p_sampler.as_ref().unwrap();
        assert!((p.cdf(0.5) - want).abs() < 1e-6, "{} {want}", p.cdf(0.5));
        assert!(p.cdf(-1e3) < 1e-9 && p.cdf(1e3) > 1.0 - 1e-9);
        assert!((below - want).abs() < 4.0 * (want * (1.0 - want) / n as f64).sqrt(), "{below} {want}");
    }

    #[test]
    fn outcomes_csv_header() {
        let dir = std::env::temp_dir().join(format!("embed-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("o.csv");
        let out = stop_time(frozen_path(0.0, 1e-2, 50.0), bm_field());
        write_outcomes_csv(&[out], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("path_id,tau,L_tau,hit_rho,censored\n0,"));
    }

    proptest! {
        #[test]
        fn clock_invariants_hold_on_random_frozen_steps(steps in prop::collection::vec((-12f64..12.0, 1e-4f64..0.5), 1..40)) {
            let f = bm_field();
            let mut st = ClockState::start();
            for (x, dt) in steps {
                let next = step_clock(f, &st, st.t + dt, x);
                prop_assert!(next.i >= st.i);
                prop_assert!(next.j >= st.j);
                prop_assert!(!st.exhausted || next == st);
                if !next.exhausted {
                    let r = f.rates(x).unwrap();
                    prop_assert!((next.g - st.g - r.a * dt).abs() <= 1e-12 * (1.0 + next.g.abs()));
                    prop_assert!((next.delta - next.delta_from_gi()).abs() <= 1e-10 * next.g.exp().max(1.0));
                }
                st = next;
            }
        }
    }
}
