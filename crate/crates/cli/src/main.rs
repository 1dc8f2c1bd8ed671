use clap::{Parser, Subcommand};
use levy_embed_cli::{run, Command, Exit, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Explicit Skorokhod embeddings for one-dimensional Levy processes.
///
/// Exit codes: 0 accepted or success, 1 runtime failure, 2 rejected pair,
/// 3 unverified pair, 5 Monte Carlo verification failed, 64 bad config or usage.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// JSON run config; the Brownian N(0,1) -> N(0,2) example when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override a leaf of the config, e.g. `--set mc.n_paths=1000`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
    /// Output directory (same as `--set output_dir=DIR`).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Print the resolved config and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Classify, run regularity and moment screens, solve for H and decide feasibility.
    Check,
    /// Solve for H and write the grid solution with diagnostics.
    Solve,
    /// Write sample paths of the process started from h0.
    Simulate {
        #[arg(long, default_value_t = 3)]
        paths: usize,
    },
    /// Run the stopping-time construction over many paths.
    Embed,
    /// Like embed, then grade the Monte Carlo report against its tolerances.
    Verify,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Exit::Usage as u8 } else { 0 });
        }
    };
    let mut sets = cli.sets;
    if let Some(o) = cli.output {
        sets.push(format!("output_dir={}", o.display()));
    }
    let cfg = match RunConfig::load(cli.config.as_deref(), &sets) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit() as u8);
        }
    };
    if cli.print_config {
        println!("{}", cfg.to_json());
        return ExitCode::SUCCESS;
    }
    let cmd = match cli.command {
        Sub::Check => Command::Check,
        Sub::Solve => Command::Solve,
        Sub::Simulate { paths } => Command::Simulate { paths },
        Sub::Embed => Command::Embed,
        Sub::Verify => Command::Verify,
    };
    match run(cmd, &cfg) {
        Ok(out) => {
            let summary = serde_json::json!({
                "exit": out.exit as u8,
                "files": out.files,
                "verdict": out.report.pointer("/feasibility/verdict"),
            });
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            ExitCode::from(out.exit as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit() as u8)
        }
    }
}
