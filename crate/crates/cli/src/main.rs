//! `quasilin` batch driver: reads an experiment config, runs one command and
//! writes JSON/CSV artifacts.
//!
//! Exit codes: 0 success, 1 scientific failure, 2 config error, 3 unconverged.

mod commands;
mod config;
mod error;
mod output;
mod setup;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Map};

use crate::commands::Ctx;
use crate::error::CliError;
use crate::output::Sink;
use crate::setup::Setup;

#[derive(Parser, Debug)]
#[command(name = "quasilin", version, about = "Quasilinear elliptic experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for random starts; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for multistarts and sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Audit the structural hypotheses of the configured scenario.
    Check,
    /// First Dirichlet eigenpair.
    Eig,
    /// Global minimizer from seeded multistarts.
    SolveMin,
    /// Mountain-pass solution.
    SolveMp,
    /// Local minimizer and mountain-pass solution.
    TwoSolutions,
    /// Parameter sweep over nu, mu or the datum amplitude.
    Sweep,
    /// Print the nonexistence threshold nu0.
    Threshold,
    /// Compare against the reference computations.
    Oracle,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Eig => "eig",
            Command::SolveMin => "solve-min",
            Command::SolveMp => "solve-mp",
            Command::TwoSolutions => "two-solutions",
            Command::Sweep => "sweep",
            Command::Threshold => "threshold",
            Command::Oracle => "oracle",
        }
    }
}

fn prepare(cli: &Cli) -> Result<Setup, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| error::config("--config PATH is required"))?;
    if cli.workers == Some(0) {
        return Err(error::config("--workers must be at least 1"));
    }
    let loaded = config::load(path)?;
    Setup::new(loaded, cli.seed)
}

fn run(cli: &Cli, setup: &Setup, sink: &mut Sink) -> Result<(), CliError> {
    let mut ctx = Ctx {
        setup,
        sink,
        command: cli.command.name(),
    };
    match cli.command {
        Command::Check => commands::cmd_check(&mut ctx),
        Command::Eig => commands::cmd_eig(&mut ctx),
        Command::SolveMin => commands::cmd_solve_min(&mut ctx),
        Command::SolveMp => commands::cmd_solve_mp(&mut ctx),
        Command::TwoSolutions => commands::cmd_two_solutions(&mut ctx),
        Command::Sweep => commands::cmd_sweep(&mut ctx),
        Command::Threshold => commands::cmd_threshold(&mut ctx),
        Command::Oracle => commands::cmd_oracle(&mut ctx),
    }
}

fn report(e: &CliError) -> ExitCode {
    let code = e.exit_code();
    match e.stage() {
        Some(stage) => eprintln!("error [stage {stage}]: {e}"),
        None => eprintln!("error: {e}"),
    }
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let t0 = Instant::now();
    let setup = match prepare(&cli) {
        Ok(s) => s,
        Err(e) => return report(&e),
    };
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return report(&error::config(format!("cannot start {n} workers: {e}")));
        }
    }
    let base = cli
        .out
        .clone()
        .or_else(|| setup.config().output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let dir = match cli.command {
        Command::Oracle => base.join("oracle"),
        _ => base,
    };
    let mut sink = match Sink::new(&dir) {
        Ok(s) => s,
        Err(e) => return report(&e),
    };
    let outcome = run(&cli, &setup, &mut sink);
    let code = outcome.as_ref().map_or_else(|e| e.exit_code(), |_| 0);
    let mut meta = Map::new();
    meta.insert("command".into(), json!(cli.command.name()));
    meta.insert("config_path".into(), json!(setup.loaded.path));
    meta.insert("config_digest".into(), json!(setup.digest()));
    meta.insert("seed".into(), json!(setup.seed));
    meta.insert("workers".into(), json!(rayon::current_num_threads()));
    meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    meta.insert("exit_code".into(), json!(code));
    meta.insert(
        "error".into(),
        json!(outcome.as_ref().err().map(|e| json!({ "message": e.to_string(), "stage": e.stage() }))),
    );
    meta.insert("wall_seconds".into(), json!(t0.elapsed().as_secs_f64()));
    if let Err(e) = sink.metadata(meta) {
        return report(&e);
    }
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
