//! Subcommands. Each returns an exit code and the JSON written to the output directory.

use crate::config::RunConfig;
use crate::{CliError, Exit, VERSION};
use levy_embed::density::{check_regularity, DensityPair, RegularityReport};
use levy_embed::embed::{write_outcomes_csv, EmbeddingOutcome, SpeedField};
use levy_embed::levy::{classify, ProcessClass};
use levy_embed::pathsim::SamplePath;
use levy_embed::poisson::{
    check_feasibility, check_moments, lipschitz_diag, solve_h, Feasibility, MomentReport, PoissonSolution, RatioFunction, Verdict,
};
use levy_embed::verify::{assess, run_embedding_mc, terminal_sample, write_ecdf_csv, Embedding, MCRun};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Check,
    Solve,
    Simulate { paths: usize },
    Embed,
    Verify,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Solve => "solve",
            Command::Simulate { .. } => "simulate",
            Command::Embed => "embed",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit: Exit,
    pub report: Value,
    /// Files written, report first.
    pub files: Vec<PathBuf>,
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(CliError::io(format!("creating {}", cfg.output_dir.display())))?;
    let mut out = match cmd {
        Command::Check => cmd_check(cfg)?,
        Command::Solve => cmd_solve(cfg)?,
        Command::Simulate { paths } => cmd_simulate(cfg, paths)?,
        Command::Embed => cmd_embed(cfg, false)?,
        Command::Verify => cmd_embed(cfg, true)?,
    };
    let mut envelope = json!({ "version": VERSION, "command": cmd.name(), "config": cfg });
    if let (Value::Object(env), Value::Object(body)) = (&mut envelope, std::mem::take(&mut out.report)) {
        env.extend(body);
    }
    let path = cfg.output_dir.join(format!("{}.json", cmd.name()));
    write_json(&path, &envelope)?;
    out.files.insert(0, path);
    out.report = envelope;
    Ok(out)
}

fn write_json(path: &Path, v: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(CliError::io(format!("writing {}", path.display())))
}

/// Everything `check` computes.
struct Analysis {
    pair: DensityPair,
    class: Option<ProcessClass>,
    class_error: Option<String>,
    regularity: Option<RegularityReport>,
    moments: MomentReport,
    solution: Option<PoissonSolution>,
    ratio: Option<RatioFunction>,
    feasibility: Feasibility,
}

fn analyze(cfg: &RunConfig, with_regularity: bool) -> Result<Analysis, CliError> {
    cfg.triplet.validate().map_err(|e| CliError::Config(format!("triplet: {e}")))?;
    let pair = DensityPair::from_specs(cfg.pair.h0.clone(), cfg.pair.h1.clone()).map_err(|e| CliError::Config(format!("pair: {e}")))?;
    let (class, class_error) = match classify(&cfg.triplet) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let regularity = match (&class, with_regularity) {
        (Some(c), true) => Some(check_regularity(&pair, c)),
        _ => None,
    };
    let moments = check_moments(&pair);
    let ratio = RatioFunction::new(pair.clone(), &cfg.triplet);
    let (ratio, solution, feasibility) = match ratio {
        Err(e) => (None, None, Feasibility::from_error(&e)),
        Ok(r) => match solve_h(&r, &cfg.grid) {
            Err(e) => (Some(r), None, Feasibility::from_error(&e)),
            Ok(sol) => {
                let f = check_feasibility(&r, &sol, regularity.as_ref(), &cfg.feasibility);
                (Some(r), Some(sol), f)
            }
        },
    };
    Ok(Analysis { pair, class, class_error, regularity, moments, solution, ratio, feasibility })
}

fn verdict_exit(v: &Verdict) -> Exit {
    match v {
        Verdict::Accepted => Exit::Ok,
        Verdict::Rejected { .. } => Exit::Rejected,
        Verdict::Unverified { .. } => Exit::Unverified,
    }
}

fn cmd_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let a = analyze(cfg, true)?;
    let report = json!({
        "classification": a.class,
        "classification_error": a.class_error,
        "regularity": a.regularity,
        "moments": a.moments,
        "diagnostics": a.solution.as_ref().map(|s| &s.diagnostics),
        "feasibility": a.feasibility,
    });
    Ok(Outcome { exit: verdict_exit(&a.feasibility.verdict), report, files: vec![] })
}

fn cmd_solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let a = analyze(cfg, false)?;
    let Some(sol) = &a.solution else {
        let report = json!({ "feasibility": a.feasibility });
        return Ok(Outcome { exit: Exit::Rejected, report, files: vec![] });
    };
    let csv = cfg.output_dir.join("H.csv");
    sol.write_csv(&csv).map_err(CliError::io(format!("writing {}", csv.display())))?;
    let lipschitz = a.ratio.as_ref().map(|r| lipschitz_diag(r).map_err(|e| e.to_string()));
    let report = json!({
        "diagnostics": sol.diagnostics,
        "lipschitz": lipschitz.as_ref().and_then(|l| l.as_ref().ok()),
        "lipschitz_error": lipschitz.as_ref().and_then(|l| l.as_ref().err()),
        "feasibility": a.feasibility,
        "h_csv": csv,
    });
    Ok(Outcome { exit: Exit::Ok, report, files: vec![csv] })
}

fn cmd_simulate(cfg: &RunConfig, paths: usize) -> Result<Outcome, CliError> {
    let pair = DensityPair::from_specs(cfg.pair.h0.clone(), cfg.pair.h1.clone()).map_err(|e| CliError::Config(format!("pair: {e}")))?;
    let dir = cfg.output_dir.join("paths");
    std::fs::create_dir_all(&dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
    let mut files = Vec::new();
    let mut summary = Vec::new();
    for k in 0..paths {
        let p = SamplePath::simulate(&cfg.triplet, &pair.h0, &cfg.mc.path, k as u64).map_err(|e| CliError::Config(e.to_string()))?;
        let f = dir.join(format!("path_{k}.csv"));
        p.write_csv(&f).map_err(CliError::io(format!("writing {}", f.display())))?;
        summary.push(json!({
            "path_id": k,
            "start": p.states[0],
            "end": p.states.last(),
            "steps": p.times.len() - 1,
            "jumps": p.jump_flags.iter().filter(|&&j| j).count(),
            "csv": f,
        }));
        files.push(f);
    }
    Ok(Outcome { exit: Exit::Ok, report: json!({ "paths": summary }), files })
}

fn cmd_embed(cfg: &RunConfig, verify: bool) -> Result<Outcome, CliError> {
    let a = analyze(cfg, verify)?;
    let Some(sol) = a.solution else {
        return Ok(Outcome { exit: Exit::Rejected, report: json!({ "feasibility": a.feasibility, "refused": true }), files: vec![] });
    };
    let mut field = SpeedField::new(sol, a.pair);
    if let Some(eps) = cfg.epsilon {
        field = field.regularize(eps).map_err(|e| CliError::Pipeline(e.to_string()))?;
    }
    let emb = match Embedding::new(field, cfg.triplet.clone(), &a.feasibility) {
        Ok(e) => e,
        Err(e) => {
            let report = json!({ "feasibility": a.feasibility, "refused": true, "reason": e.to_string() });
            return Ok(Outcome { exit: Exit::Rejected, report, files: vec![] });
        }
    };
    let MCRun { outcomes, report, .. } = run_embedding_mc(&emb, &cfg.mc).map_err(|e| CliError::Pipeline(e.to_string()))?;
    let csv = cfg.output_dir.join("outcomes.csv");
    let plain: Vec<EmbeddingOutcome> = outcomes.iter().map(|o| o.outcome.clone()).collect();
    write_outcomes_csv(&plain, &csv).map_err(CliError::io(format!("writing {}", csv.display())))?;
    let mut files = vec![csv];
    let mut body = json!({ "feasibility": a.feasibility, "report": report });
    let mut exit = Exit::Ok;
    if verify {
        let sorted = terminal_sample(&outcomes);
        let ecdf = cfg.output_dir.join("ecdf_terminal.csv");
        write_ecdf_csv(&sorted, |x| emb.field.phi_cdf(1.0, x), 2000, &ecdf).map_err(CliError::io(format!("writing {}", ecdf.display())))?;
        files.push(ecdf);
        let verdict = assess(&report, &cfg.mc);
        if !verdict.passed {
            exit = Exit::VerifyFailed;
        } else if !a.feasibility.verdict.is_accepted() {
            exit = Exit::Unverified;
        }
        body["assessment"] = json!(verdict);
    }
    Ok(Outcome { exit, report: body, files })
}
