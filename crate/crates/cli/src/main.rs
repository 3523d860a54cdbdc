//! `vqo`: run facility-placement experiments from an INI config.

mod commands;
mod config;
mod manifest;
mod schema;
mod summary;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use vqo_core::Execution;

use crate::commands::RunContext;
use crate::config::{Config, ROOT};
use crate::manifest::Manifest;

#[derive(Parser)]
#[command(name = "vqo", version = manifest::VERSION, about = "Variational and classical ambulance-placement experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// INI experiment description.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `[run] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path; defaults to `<command>.csv`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run restarts and reads on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write the QUBO of `[problem]` as text.
    Encode,
    /// Exhaustive minimum of `[problem]`.
    #[command(after_help = schema::describe(&[("oracle", schema::ORACLE)]))]
    Oracle,
    /// Random-restart QAOA, optionally grown with `[qaoa] strategy`.
    #[command(after_help = schema::describe(&[("runs", schema::QAOA_RUNS), ("schedule", schema::QAOA_SCHEDULE)]))]
    Qaoa,
    /// Random-restart VQE with a hardware-efficient ansatz.
    #[command(after_help = schema::describe(&[("runs", schema::VQE_RUNS)]))]
    Vqe,
    /// Tabu search and simulated annealing restarts.
    #[command(after_help = schema::describe(&[("baseline", schema::BASELINE)]))]
    Baseline,
    /// Penalty sweep or closed-system anneal simulation.
    #[command(after_help = schema::describe(&[("sweep", schema::ANNEAL_SWEEP), ("sim", schema::ANNEAL_TIME)]))]
    Anneal,
    /// Time-to-solution table.
    #[command(after_help = schema::describe(&[("tts", schema::TTS)]))]
    Tts,
    /// Mean, error bar and best value of each numeric column of a CSV.
    #[command(after_help = schema::describe(&[("summary", schema::SUMMARY)]))]
    Summarize {
        /// Results CSV to summarise.
        input: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Encode => "encode",
            Command::Oracle => "oracle",
            Command::Qaoa => "qaoa",
            Command::Vqe => "vqe",
            Command::Baseline => "baseline",
            Command::Anneal => "anneal",
            Command::Tts => "tts",
            Command::Summarize { .. } => "summarize",
        }
    }

    fn default_out(&self) -> PathBuf {
        match self {
            Command::Encode => "encode.qubo".into(),
            _ => format!("{}.csv", self.name()).into(),
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let started = Instant::now();
    let config = match &cli.global.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let seed = match cli.global.seed {
        Some(s) => s,
        None => config.section(ROOT).get_or("seed", 0u64)?,
    };
    let ctx = RunContext {
        config,
        seed,
        out: cli.global.out.clone().unwrap_or_else(|| cli.command.default_out()),
        execution: if cli.global.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    };
    let report = match &cli.command {
        Command::Encode => commands::run_encode(&ctx)?,
        Command::Oracle => commands::run_oracle(&ctx)?,
        Command::Qaoa => commands::run_qaoa(&ctx)?,
        Command::Vqe => commands::run_vqe(&ctx)?,
        Command::Baseline => commands::run_baseline(&ctx)?,
        Command::Anneal => commands::run_anneal(&ctx)?,
        Command::Tts => commands::run_tts(&ctx)?,
        Command::Summarize { input } => commands::run_summarize(&ctx, input)?,
    };
    let manifest = Manifest {
        tool: "vqo",
        version: manifest::VERSION,
        command: cli.command.name(),
        seed,
        wall_time_s: started.elapsed().as_secs_f64(),
        outputs: report.outputs.iter().map(|p| p.display().to_string()).collect(),
        config: ctx.config.echo(),
        extra: report.extra,
    };
    let path = manifest.write(&ctx.out)?;
    eprintln!("wrote {} and {}", ctx.out.display(), path.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
