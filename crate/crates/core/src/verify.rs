//! Monte Carlo evidence that the constructed stopping time embeds the target:
//! mean identity, KS and Wasserstein distances, the Dynkin identity, intermediate
//! marginals and a weak-form Fokker-Planck check.

use crate::embed::{run_clock, ClockRequest, EmbeddingOutcome, SpeedField};
use crate::levy::{eta_eval, generator_apply, CompactBump, LevyError, LevyTriplet, TestFunction};
use crate::pathsim::{path_rng, IncrementSampler, PathConfig, PathError, PathStream};
use crate::poisson::{Feasibility, Verdict};
use crate::quad::{integrate_breaks, integrate_line, integrate_lower, integrate_upper, KahanSum, QuadOptions};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("pair was rejected ({0}); refusing to simulate")]
    Rejected(String),
    #[error("invalid Monte Carlo config: {0}")]
    Config(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Compact bump `exp(-1/(1 - r²))` used as a Fokker-Planck test function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: f64,
    pub radius: f64,
}

impl BumpSpec {
    pub fn function(&self) -> CompactBump {
        CompactBump { center: self.center, radius: self.radius, amplitude: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MCConfig {
    pub n_paths: usize,
    pub path: PathConfig,
    /// Horizon as a multiple of `∫H`; `None` keeps `path.t_max`.
    pub horizon_factor: Option<f64>,
    pub u_probe: Vec<f64>,
    pub s_probe: Vec<f64>,
    pub test_functions: Vec<BumpSpec>,
    pub fp_times: Vec<f64>,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
    pub ks_allowance: f64,
    pub max_censoring: f64,
    /// Largest acceptable Fokker-Planck residual.
    pub fp_tol: f64,
}

impl Default for MCConfig {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            path: PathConfig::default(),
            horizon_factor: Some(50.0),
            u_probe: vec![0.5, 1.0, 2.0],
            s_probe: vec![0.5],
            test_functions: vec![BumpSpec { center: 0.0, radius: 1.0 }, BumpSpec { center: 1.0, radius: 1.5 }],
            fp_times: vec![0.5, 1.0],
            threads: 0,
            ks_allowance: 0.005,
            max_censoring: 0.01,
            fp_tol: 1e-5,
        }
    }
}

impl MCConfig {
    pub fn validate(&self) -> Result<(), VerifyError> {
        let bad = |m: String| Err(VerifyError::Config(m));
        if self.n_paths < 100 {
            return bad(format!("n_paths must be at least 100, got {}", self.n_paths));
        }
        if self.u_probe.iter().any(|u| !u.is_finite()) {
            return bad("u_probe entries must be finite".into());
        }
        if self.s_probe.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return bad("s_probe entries must lie in [0, 1]".into());
        }
        if self.fp_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return bad("fp_times must be finite and nonnegative".into());
        }
        if self.test_functions.iter().any(|b| !(b.center.is_finite() && b.radius > 0.0 && b.radius.is_finite())) {
            return bad("test functions need a finite center and positive radius".into());
        }
        if matches!(self.horizon_factor, Some(f) if !(f > 0.0 && f.is_finite())) {
            return bad("horizon_factor must be positive".into());
        }
        self.path.validate()?;
        Ok(())
    }
}

/// A solved field and its process, cleared for simulation.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub field: SpeedField,
    pub triplet: LevyTriplet,
}

impl Embedding {
    /// Refuses rejected pairs; unverified pairs are let through and say so in the report.
    pub fn new(field: SpeedField, triplet: LevyTriplet, feasibility: &Feasibility) -> Result<Self, VerifyError> {
        if let Verdict::Rejected { reason } = &feasibility.verdict {
            return Err(VerifyError::Rejected(reason.clone()));
        }
        Ok(Self { field, triplet })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PathOutcome {
    pub x0: f64,
    #[serde(flatten)]
    pub outcome: EmbeddingOutcome,
}

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    /// Welford's update over the samples in order.
    pub fn from_samples<I: IntoIterator<Item = f64>>(xs: I) -> Self {
        let (mut mean, mut m2, mut n) = (0.0, 0.0, 0usize);
        for x in xs {
            n += 1;
            let d = x - mean;
            mean += d / n as f64;
            m2 += d * (x - mean);
        }
        if n == 0 {
            return Self { mean: f64::NAN, se: f64::NAN, n };
        }
        let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
        Self { mean, se: (var / n as f64).sqrt(), n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynkinStat {
    pub u: f64,
    /// `η(u)·E∫₀^τ e^{iuL} - ĝ(u)`, real and imaginary parts with their SEs.
    pub residual_re: Estimate,
    pub residual_im: Estimate,
    pub g_hat_re: f64,
    pub g_hat_im: f64,
    pub within_3se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceStat {
    pub n: usize,
    pub ks: f64,
    /// `1.36/√n + allowance`.
    pub ks_limit: f64,
    pub ks_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalStat {
    pub s: f64,
    pub mean_delta: Estimate,
    #[serde(flatten)]
    pub distance: DistanceStat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpStat {
    pub center: f64,
    pub radius: f64,
    pub t: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCReport {
    pub n_paths: usize,
    pub seed: u64,
    pub dt_base: f64,
    pub t_max: f64,
    pub epsilon: f64,
    /// `(1-ε)∫H`, the theoretical mean of `τ`.
    pub integral_h: f64,
    pub mean_tau: Estimate,
    pub mean_tau_z: f64,
    pub terminal: DistanceStat,
    pub wasserstein1: f64,
    pub dynkin: Vec<DynkinStat>,
    pub marginals: Vec<MarginalStat>,
    pub fp_residual: Vec<FpStat>,
    pub hit_rho: usize,
    pub censored: usize,
    pub censoring_rate: f64,
    /// False when censoring exceeds the allowance; such a report cannot pass acceptance.
    pub valid: bool,
    pub max_integrand: f64,
    pub max_identity_defect: f64,
}

/// Outcomes in path order plus the summary built from them.
#[derive(Debug, Clone)]
pub struct MCRun {
    pub outcomes: Vec<PathOutcome>,
    pub report: MCReport,
    pub t_max: f64,
}

/// Horizon actually used for a config.
pub fn horizon(emb: &Embedding, cfg: &MCConfig) -> f64 {
    match cfg.horizon_factor {
        Some(f) if emb.field.integral_h() > 0.0 => f * emb.field.integral_h(),
        _ => cfg.path.t_max,
    }
}

/// Simulate all paths; results depend only on `(seed, n_paths, config)`, not on the worker count.
pub fn simulate_outcomes(emb: &Embedding, cfg: &MCConfig) -> Result<(Vec<PathOutcome>, f64), VerifyError> {
    cfg.validate()?;
    let t_max = horizon(emb, cfg);
    let path_cfg = PathConfig { t_max, ..cfg.path };
    path_cfg.validate()?;
    let sampler = IncrementSampler::new(&emb.triplet, path_cfg.small_jump_cutoff)?;
    let request = ClockRequest { levels: cfg.s_probe.clone(), probes: cfg.u_probe.clone(), trace: false };
    let one = |k: usize| {
        let mut rng = path_rng(path_cfg.seed, k as u64);
        let x0 = emb.field.sample_initial(&mut rng);
        let stream = PathStream::new(&sampler, x0, rng, &path_cfg);
        PathOutcome { x0, outcome: run_clock(&emb.field, stream, &request, |_| {}) }
    };
    let outcomes = if cfg.threads == 0 {
        (0..cfg.n_paths).into_par_iter().map(one).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| VerifyError::Pool(e.to_string()))?
            .install(|| (0..cfg.n_paths).into_par_iter().map(one).collect())
    };
    Ok((outcomes, t_max))
}

/// Pass/fail reading of a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    /// `|mean τ - (1-ε)∫H| ≤ 3 SE`.
    pub mean_tau: bool,
    pub terminal_ks: bool,
    pub dynkin: bool,
    pub marginals: bool,
    pub fokker_planck: bool,
    pub censoring: bool,
    pub passed: bool,
}

pub fn assess(report: &MCReport, cfg: &MCConfig) -> Assessment {
    let mean_tau = report.mean_tau_z.abs() <= 3.0;
    let terminal_ks = report.terminal.ks_pass;
    let dynkin = report.dynkin.iter().all(|d| d.within_3se);
    let marginals = report.marginals.iter().all(|m| m.distance.ks_pass);
    let fokker_planck = report.fp_residual.iter().all(|f| f.residual <= cfg.fp_tol);
    let censoring = report.valid;
    Assessment {
        mean_tau,
        terminal_ks,
        dynkin,
        marginals,
        fokker_planck,
        censoring,
        passed: mean_tau && terminal_ks && dynkin && marginals && fokker_planck && censoring,
    }
}

/// Full Monte Carlo run with its report.
pub fn run_embedding_mc(emb: &Embedding, cfg: &MCConfig) -> Result<MCRun, VerifyError> {
    let (outcomes, t_max) = simulate_outcomes(emb, cfg)?;
    let report = summarize(emb, cfg, &outcomes, t_max)?;
    Ok(MCRun { outcomes, report, t_max })
}

pub fn summarize(emb: &Embedding, cfg: &MCConfig, outcomes: &[PathOutcome], t_max: f64) -> Result<MCReport, VerifyError> {
    let kept: Vec<&PathOutcome> = outcomes.iter().filter(|o| !o.outcome.censored).collect();
    let censored = outcomes.len() - kept.len();
    let censoring_rate = censored as f64 / outcomes.len().max(1) as f64;
    let mean_tau = Estimate::from_samples(kept.iter().map(|o| o.outcome.tau));
    let integral_h = emb.field.integral_h();
    let mean_tau_z = if mean_tau.se > 0.0 { (mean_tau.mean - integral_h) / mean_tau.se } else if mean_tau.mean == integral_h { 0.0 } else { f64::INFINITY };

    let mut terminal: Vec<f64> = kept.iter().map(|o| o.outcome.l_tau).collect();
    terminal.sort_by(f64::total_cmp);
    let target = |x: f64| emb.field.phi_cdf(1.0, x);
    let terminal_stat = distance(&terminal, target, cfg.ks_allowance);
    let wasserstein1 = wasserstein1_sorted(&terminal, target);

    let dynkin = dynkin_check(emb, cfg, outcomes)?;
    let marginals = cfg.s_probe.iter().map(|&s| marginal_check(emb, cfg, outcomes, s)).collect();
    let mut fp_residual = Vec::new();
    for b in &cfg.test_functions {
        for &t in &cfg.fp_times {
            let residual = fokker_planck_residual(emb, &b.function(), t)?;
            fp_residual.push(FpStat { center: b.center, radius: b.radius, t, residual });
        }
    }
    Ok(MCReport {
        n_paths: outcomes.len(),
        seed: cfg.path.seed,
        dt_base: cfg.path.dt_base,
        t_max,
        epsilon: emb.field.epsilon(),
        integral_h,
        mean_tau,
        mean_tau_z,
        terminal: terminal_stat,
        wasserstein1,
        dynkin,
        marginals,
        fp_residual,
        hit_rho: outcomes.iter().filter(|o| o.outcome.hit_rho).count(),
        censored,
        censoring_rate,
        valid: censoring_rate <= cfg.max_censoring,
        max_integrand: outcomes.iter().map(|o| o.outcome.max_integrand).fold(0.0, f64::max),
        max_identity_defect: outcomes.iter().map(|o| o.outcome.identity_defect).fold(0.0, f64::max),
    })
}

/// `η(u)·MC-mean(∫₀^τ e^{iuL}) - ĝ(u)` for each probe. Censored paths are excluded.
pub fn dynkin_check(emb: &Embedding, cfg: &MCConfig, outcomes: &[PathOutcome]) -> Result<Vec<DynkinStat>, VerifyError> {
    let kept: Vec<&PathOutcome> = outcomes.iter().filter(|o| !o.outcome.censored).collect();
    let scale = 1.0 - emb.field.epsilon();
    cfg.u_probe
        .iter()
        .enumerate()
        .map(|(k, &u)| {
            let eta = eta_eval(&emb.triplet, u)?;
            // regularized densities shift ĝ by the factor (1 - ε)
            let g_hat = emb.field.pair().g_hat(u) * scale;
            let w: Vec<Complex64> = kept.iter().map(|o| eta * o.outcome.dynkin[k] - g_hat).collect();
            let residual_re = Estimate::from_samples(w.iter().map(|z| z.re));
            let residual_im = Estimate::from_samples(w.iter().map(|z| z.im));
            let ok = |e: &Estimate| e.mean.abs() <= 3.0 * e.se || e.mean.abs() < 1e-14;
            Ok(DynkinStat {
                u,
                within_3se: ok(&residual_re) && ok(&residual_im),
                residual_re,
                residual_im,
                g_hat_re: g_hat.re,
                g_hat_im: g_hat.im,
            })
        })
        .collect()
}

/// KS distance of `L_{δ(s)}` against `φ(s,·)`.
pub fn marginal_check(emb: &Embedding, cfg: &MCConfig, outcomes: &[PathOutcome], s: f64) -> MarginalStat {
    let kept: Vec<&PathOutcome> = outcomes.iter().filter(|o| !o.outcome.censored).collect();
    let pick = |o: &PathOutcome| -> (f64, f64) {
        if s >= 1.0 {
            (o.outcome.tau, o.outcome.l_tau)
        } else if s <= 0.0 {
            (0.0, o.x0)
        } else {
            let h = o.outcome.schedule.iter().find(|h| h.s == s).expect("level recorded during the run");
            (h.time, h.state)
        }
    };
    let pairs: Vec<(f64, f64)> = kept.iter().map(|o| pick(o)).collect();
    let mut xs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    xs.sort_by(f64::total_cmp);
    MarginalStat {
        s,
        mean_delta: Estimate::from_samples(pairs.iter().map(|p| p.0)),
        distance: distance(&xs, |x| emb.field.phi_cdf(s, x), cfg.ks_allowance),
    }
}

fn distance(sorted: &[f64], cdf: impl Fn(f64) -> f64, allowance: f64) -> DistanceStat {
    let n = sorted.len();
    let ks = ks_sorted(sorted, cdf);
    let ks_limit = 1.36 / (n as f64).sqrt() + allowance;
    DistanceStat { n, ks, ks_limit, ks_pass: ks <= ks_limit }
}

/// Two-sided KS statistic of a sorted sample against a continuous CDF.
pub fn ks_sorted(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i + 1) as f64 / n - f).max(f - i as f64 / n)
    })
}

/// `∫|F_n - F|` over the line, two-point Gauss between order statistics.
pub fn wasserstein1_sorted(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let opts = QuadOptions::with_tol(1e-10, 1e-8);
    let mut acc = KahanSum::new();
    acc.add(integrate_lower(&cdf, sorted[0], opts).value);
    acc.add(integrate_upper(|x| 1.0 - cdf(x), sorted[n - 1], opts).value);
    let g = 0.5 / 3f64.sqrt();
    for (i, w) in sorted.windows(2).enumerate() {
        let h = w[1] - w[0];
        if h > 0.0 {
            let level = (i + 1) as f64 / n as f64;
            let m = 0.5 * (w[0] + w[1]);
            acc.add(0.5 * h * ((level - cdf(m - g * h)).abs() + (level - cdf(m + g * h)).abs()));
        }
    }
    acc.value()
}

/// `|∫f φ(t) - ∫f h₀ - ∫₀ᵗ∫σ(s,x)𝒜f(x)φ(s,x) dx ds|`, all by quadrature.
pub fn fokker_planck_residual<F: TestFunction>(emb: &Embedding, f: &F, t: f64) -> Result<f64, VerifyError> {
    let field = &emb.field;
    let opts = QuadOptions::with_tol(1e-12, 1e-10);
    let mass_change = match f.support() {
        Some((a, b)) => integrate_breaks(|x| f.value(x) * (field.phi(t, x) - field.h0(x)), &[a, 0.5 * (a + b), b], opts).value,
        None => integrate_line(|x| f.value(x) * (field.phi(t, x) - field.h0(x)), 0.0, opts).value,
    };
    // Gauss-Legendre in s (two nodes); σφ does not depend on s, so the rule is exact
    let nodes = [0.5 * t * (1.0 - 1.0 / 3f64.sqrt()), 0.5 * t * (1.0 + 1.0 / 3f64.sqrt())];
    let speed_mass = |x: f64| -> f64 {
        nodes
            .iter()
            .map(|&s| {
                let p = field.phi(s, x);
                if p > 0.0 {
                    0.5 * t * field.sigma(s, x) * p
                } else {
                    0.0
                }
            })
            .sum()
    };
    let err = std::cell::RefCell::new(None);
    let generated = |x: f64| -> f64 {
        let w = speed_mass(x);
        if w == 0.0 {
            return 0.0;
        }
        match generator_apply(&emb.triplet, f, x) {
            Ok(af) => w * af,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let flow = if emb.triplet.nu.is_zero() {
        match f.support() {
            Some((a, b)) => integrate_breaks(generated, &[a, 0.5 * (a + b), b], opts).value,
            None => integrate_line(generated, 0.0, opts).value,
        }
    } else {
        let (a, b) = f.support().unwrap_or((-1.0, 1.0));
        let far = QuadOptions::with_tol(1e-11, 1e-8);
        integrate_lower(generated, a, far).value + integrate_breaks(generated, &[a, 0.5 * (a + b), b], far).value + integrate_upper(generated, b, far).value
    };
    if let Some(e) = err.into_inner() {
        return Err(e.into());
    }
    Ok((mass_change - flow).abs())
}

/// Empirical CDF against the target, columns `x,ecdf,target`.
pub fn write_ecdf_csv(sorted: &[f64], cdf: impl Fn(f64) -> f64, max_rows: usize, path: &Path) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "x,ecdf,target")?;
    let n = sorted.len();
    let stride = n.div_ceil(max_rows.max(1)).max(1);
    for i in (0..n).step_by(stride) {
        writeln!(w, "{},{},{}", sorted[i], (i + 1) as f64 / n as f64, cdf(sorted[i]))?;
    }
    w.flush()
}

/// Terminal states of uncensored paths, sorted.
pub fn terminal_sample(outcomes: &[PathOutcome]) -> Vec<f64> {
    let mut xs: Vec<f64> = outcomes.iter().filter(|o| !o.outcome.censored).map(|o| o.outcome.l_tau).collect();
    xs.sort_by(f64::total_cmp);
    xs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{DensityPair, DensitySpec};
    use crate::numeric::normal_cdf;
    use crate::poisson::{check_feasibility, solve_h, FeasibilityOptions, GridParams, RatioFunction};
    use proptest::prelude::*;

    fn embedding(h0: DensitySpec, h1: DensitySpec) -> Result<Embedding, VerifyError> {
        let pair = DensityPair::from_specs(h0, h1).unwrap();
        let t = LevyTriplet::brownian(1.0);
        let r = RatioFunction::new(pair.clone(), &t).unwrap();
        let sol = solve_h(&r, &GridParams::default()).unwrap();
        let feas = check_feasibility(&r, &sol, None, &FeasibilityOptions::default());
        Embedding::new(SpeedField::new(sol, pair), t, &feas)
    }

    fn bm() -> Embedding {
        embedding(DensitySpec::gaussian(0.0, 1.0), DensitySpec::gaussian(0.0, 2.0)).unwrap()
    }

    fn small(n: usize, threads: usize) -> MCConfig {
        MCConfig { n_paths: n, threads, path: PathConfig { dt_base: 2e-3, seed: 1, ..Default::default() }, ..Default::default() }
    }

    #[test]
    fn reversed_pair_is_refused() {
        let e = embedding(DensitySpec::gaussian(0.0, 2.0), DensitySpec::gaussian(0.0, 1.0));
        assert!(matches!(e, Err(VerifyError::Rejected(r)) if r.starts_with("H_nonnegative=false")));
    }

    #[test]
    fn identical_pair_has_zero_mean_tau() {
        let e = embedding(DensitySpec::gaussian(0.0, 1.0), DensitySpec::gaussian(0.0, 1.0)).unwrap();
        let run = run_embedding_mc(&e, &small(2000, 0)).unwrap();
        assert_eq!(run.report.mean_tau.mean, 0.0);
        assert_eq!(run.report.hit_rho, 2000);
        // 1% critical value: the start sampler is the only noise source
        assert!(run.report.terminal.ks < 1.63 / 2000f64.sqrt(), "{:?}", run.report.terminal);
        assert!(run.report.fp_residual.iter().all(|f| f.residual < 1e-12));
    }

    #[test]
    fn small_run_is_consistent() {
        let run = run_embedding_mc(&bm(), &small(4000, 0)).unwrap();
        let r = &run.report;
        assert!(r.valid && r.censored == 0);
        assert!(r.mean_tau_z.abs() < 4.0, "{r:?}");
        assert!(r.terminal.ks < 1.63 / (4000f64).sqrt() + 0.01, "{:?}", r.terminal);
        assert!(r.max_identity_defect < 1e-10);
        assert!(assess(r, &small(4000, 0)).passed, "{:?}", assess(r, &small(4000, 0)));
        for d in &r.dynkin {
            assert!(d.residual_re.mean.abs() < 5.0 * d.residual_re.se + 1e-12, "{d:?}");
        }
        for f in &r.fp_residual {
            assert!(f.residual < 1e-5, "{f:?}");
        }
    }

    #[test]
    fn dynkin_at_zero_is_exact() {
        let e = bm();
        let cfg = MCConfig { u_probe: vec![0.0], ..small(200, 0) };
        let run = run_embedding_mc(&e, &cfg).unwrap();
        assert_eq!(run.report.dynkin[0].residual_re.mean, 0.0);
        assert_eq!(run.report.dynkin[0].residual_im.mean, 0.0);
    }

    #[test]
    fn worker_count_does_not_change_outcomes() {
        let e = bm();
        let a = run_embedding_mc(&e, &small(400, 1)).unwrap();
        let b = run_embedding_mc(&e, &small(400, 3)).unwrap();
        assert_eq!(serde_json::to_string(&a.report).unwrap(), serde_json::to_string(&b.report).unwrap());
    }

    #[test]
    fn marginal_at_zero_is_the_start_law() {
        let e = bm();
        let cfg = MCConfig { s_probe: vec![0.0, 1.0], ..small(2000, 0) };
        let run = run_embedding_mc(&e, &cfg).unwrap();
        assert!(run.report.marginals[0].distance.ks < 1.63 / 2000f64.sqrt());
        assert_eq!(run.report.marginals[0].mean_delta.mean, 0.0);
        assert_eq!(run.report.marginals[1].distance.ks, run.report.terminal.ks);
    }

    #[test]
    fn fokker_planck_is_linear_in_time() {
        let e = bm();
        let f = BumpSpec { center: 0.3, radius: 2.0 }.function();
        let r1 = fokker_planck_residual(&e, &f, 1.0).unwrap();
        let r5 = fokker_planck_residual(&e, &f, 0.5).unwrap();
        assert!(r1 < 1e-5, "{r1}");
        assert!((r5 - 0.5 * r1).abs() < 1e-9, "{r5} {r1}");
    }

    #[test]
    fn ks_and_w1_against_exact_quantiles() {
        // midpoint quantiles of N(0,1): KS = 1/(2n), W1 small
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| crate::numeric::normal_quantile((i as f64 + 0.5) / n as f64)).collect();
        let ks = ks_sorted(&xs, normal_cdf);
        assert!((ks - 0.5 / n as f64).abs() < 1e-12, "{ks}");
        assert!(wasserstein1_sorted(&xs, normal_cdf) < 3e-3);
        let shifted: Vec<f64> = xs.iter().map(|x| x + 0.1).collect();
        assert!((wasserstein1_sorted(&shifted, normal_cdf) - 0.1).abs() < 3e-3);
        // a single atom at 0 sits at distance E|X| from N(0,1)
        let w = wasserstein1_sorted(&[0.0], normal_cdf);
        assert!((w - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-8, "{w}");
    }

    #[test]
    fn config_validation() {
        assert!(small(50, 0).validate().is_err());
        assert!(MCConfig { s_probe: vec![1.5], ..Default::default() }.validate().is_err());
        assert!(MCConfig { u_probe: vec![f64::NAN], ..Default::default() }.validate().is_err());
        assert!(MCConfig::default().validate().is_ok());
    }

    proptest! {
        #[test]
        fn estimate_matches_two_pass(xs in prop::collection::vec(-1e3f64..1e3, 2..200)) {
            let e = Estimate::from_samples(xs.iter().copied());
            let n = xs.len() as f64;
            let m = xs.iter().sum::<f64>() / n;
            let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
            prop_assert!((e.mean - m).abs() <= 1e-9 * (1.0 + m.abs()));
            prop_assert!((e.se - (v / n).sqrt()).abs() <= 1e-6 * (1.0 + (v / n).sqrt()));
        }

        #[test]
        fn ks_is_a_sup_distance(xs in prop::collection::vec(-5f64..5.0, 1..300)) {
            let mut xs = xs;
            xs.sort_by(f64::total_cmp);
            let ks = ks_sorted(&xs, normal_cdf);
            prop_assert!((0.0..=1.0).contains(&ks));
            prop_assert!(ks >= 0.5 / xs.len() as f64 - 1e-15);
        }
    }
}
