//! End-to-end runs through the public API: solve, gate, clock, Monte Carlo.

use levy_embed::density::{DensityPair, DensitySpec, MixtureComponent};
use levy_embed::embed::SpeedField;
use levy_embed::levy::LevyTriplet;
use levy_embed::pathsim::PathConfig;
use levy_embed::poisson::{check_feasibility, solve_h, FeasibilityOptions, GridParams, RatioFunction, Verdict};
use levy_embed::verify::{run_embedding_mc, Embedding, MCConfig};

fn embedding(h0: DensitySpec, h1: DensitySpec, t: LevyTriplet) -> (Embedding, Verdict) {
    let pair = DensityPair::from_specs(h0, h1).unwrap();
    let r = RatioFunction::new(pair.clone(), &t).unwrap();
    let sol = solve_h(&r, &GridParams::default()).unwrap();
    let feas = check_feasibility(&r, &sol, None, &FeasibilityOptions::default());
    let verdict = feas.verdict.clone();
    (Embedding::new(SpeedField::new(sol, pair), t, &feas).unwrap(), verdict)
}

fn quiet(n: usize, dt: f64, seed: u64) -> MCConfig {
    MCConfig {
        n_paths: n,
        u_probe: vec![],
        s_probe: vec![],
        test_functions: vec![],
        path: PathConfig { dt_base: dt, seed, ..Default::default() },
        ..Default::default()
    }
}

fn bimodal() -> DensitySpec {
    let c = |mean| MixtureComponent { weight: 0.5, mean, variance: 1.0 };
    DensitySpec::GaussianMixture { components: vec![c(-1.0), c(1.0)] }
}

#[test]
fn bimodal_target_mass_follows_wald() {
    // for BM, ∫H = E X₁² - E X₀² = 2 - 1
    let (emb, verdict) = embedding(DensitySpec::gaussian(0.0, 1.0), bimodal(), LevyTriplet::brownian(1.0));
    assert_eq!(verdict, Verdict::Accepted);
    assert!((emb.field.integral_h() - 1.0).abs() < 1e-6, "{}", emb.field.integral_h());
    let cfg = MCConfig { s_probe: vec![0.5], ..quiet(20_000, 1e-3, 4) };
    let r = run_embedding_mc(&emb, &cfg).unwrap().report;
    assert!(r.valid);
    assert!(r.mean_tau_z.abs() <= 3.0, "{:?}", r.mean_tau);
    assert!(r.terminal.ks_pass, "{:?}", r.terminal);
    assert!(r.marginals[0].distance.ks_pass, "{:?}", r.marginals);
}

#[test]
fn halving_the_step_moves_mean_tau_less_than_one_se() {
    let (emb, _) = embedding(DensitySpec::gaussian(0.0, 1.0), DensitySpec::gaussian(0.0, 2.0), LevyTriplet::brownian(1.0));
    let coarse = run_embedding_mc(&emb, &quiet(20_000, 2e-3, 2)).unwrap().report.mean_tau;
    let fine = run_embedding_mc(&emb, &quiet(20_000, 1e-3, 2)).unwrap().report.mean_tau;
    assert!((coarse.mean - fine.mean).abs() < fine.se, "{coarse:?} {fine:?}");
}

#[test]
fn dynkin_standard_error_scales_with_root_n() {
    let (emb, _) = embedding(DensitySpec::gaussian(0.0, 1.0), DensitySpec::gaussian(0.0, 2.0), LevyTriplet::brownian(1.0));
    let run = |n| {
        let cfg = MCConfig { u_probe: vec![1.0], ..quiet(n, 2e-3, 6) };
        run_embedding_mc(&emb, &cfg).unwrap().report.dynkin[0].clone()
    };
    let (small, large) = (run(2_500), run(10_000));
    let ratio = small.residual_re.se / large.residual_re.se;
    assert!((ratio - 2.0).abs() <= 0.3, "{ratio}");
    assert!(large.within_3se, "{large:?}");
}

#[test]
fn regularized_run_targets_the_shifted_mean() {
    let (emb, _) = embedding(DensitySpec::gaussian(0.0, 1.0), DensitySpec::gaussian(0.0, 2.0), LevyTriplet::brownian(1.0));
    let reg = Embedding { field: emb.field.regularize(0.25).unwrap(), triplet: emb.triplet.clone() };
    let r = run_embedding_mc(&reg, &MCConfig { s_probe: vec![0.5], u_probe: vec![1.0], ..quiet(10_000, 2e-3, 8) }).unwrap().report;
    assert!((r.integral_h - 0.75).abs() < 1e-6);
    assert!(r.mean_tau_z.abs() <= 3.0, "{:?}", r.mean_tau);
    assert!(r.terminal.ks_pass && r.marginals[0].distance.ks_pass, "{:?} {:?}", r.terminal, r.marginals);
    assert!(r.dynkin[0].within_3se, "{:?}", r.dynkin);
}

#[test]
fn compound_poisson_lattice_pair() {
    // ν = δ₂ with h₁ = law of h₀ after an independent Poisson(1) number of +2 jumps
    // compensated by drift -2: ĝ vanishes on the lattice zeros of η
    let t = LevyTriplet::compound_poisson(&[(2.0, 1.0)], -2.0);
    let h0 = DensitySpec::gaussian(0.0, 0.5);
    let weights: Vec<f64> = (0..24).map(|k| (-1.0f64).exp() / (1..=k).map(f64::from).product::<f64>()).collect();
    let components = weights.iter().enumerate().map(|(k, &w)| MixtureComponent { weight: w, mean: 2.0 * k as f64 - 2.0, variance: 0.5 }).collect();
    let h1 = DensitySpec::GaussianMixture { components };
    let (emb, verdict) = embedding(h0, h1, t);
    assert!(!matches!(verdict, Verdict::Rejected { .. }), "{verdict:?}");
    let r = run_embedding_mc(&emb, &MCConfig { s_probe: vec![], u_probe: vec![0.7], ..quiet(5_000, 1e-3, 12) }).unwrap().report;
    assert!(r.mean_tau_z.abs() <= 3.0, "{:?} vs {}", r.mean_tau, r.integral_h);
    assert!(r.terminal.ks <= 1.63 / (r.terminal.n as f64).sqrt() + 0.005, "{:?}", r.terminal);
}
