use clap::{Parser, Subcommand};
use poisonlab::error::Error;
use poisonlab::experiment::{
    cmd_generate_data, cmd_hessian, cmd_poison_train, cmd_report, cmd_unlearn, ExperimentConfig,
    RunContext,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "poisonlab",
    about = "Classical vs quantum classifiers under data poisoning: training sweeps, unlearning, and loss-landscape analysis"
)]
struct Cli {
    /// Experiment config (JSON); required by all subcommands except report
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSVs, records, and checkpoints
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for parallel cells (defaults to available cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Base seed mixed into every per-cell RNG stream
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Dataset cache directory (fallback: POISONLAB_CACHE, then <out>/cache)
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and cache the configured dataset
    GenerateData,
    /// Run the (alpha, seed) poisoning/training grid
    PoisonTrain,
    /// Run the unlearning methods from a poisoned checkpoint
    Unlearn,
    /// Hessian traces and the LRR summary for matched clean/noisy pairs
    Hessian,
    /// Aggregate sweep CSVs into summary tables
    Report,
}

fn resolve_cache(cli: &Cli) -> PathBuf {
    cli.cache
        .clone()
        .or_else(|| std::env::var_os("POISONLAB_CACHE").map(PathBuf::from))
        .unwrap_or_else(|| cli.out.join("cache"))
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::usage("--config is required for this subcommand"))?;
    ExperimentConfig::load(path)
}

fn run(cli: &Cli) -> Result<usize, Error> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool setup failed: {e}")))?;
    }
    let ctx = RunContext::new(cli.out.clone(), resolve_cache(cli), cli.seed)?;
    match cli.command {
        Command::GenerateData => {
            cmd_generate_data(&load_config(cli)?, &ctx)?;
            Ok(0)
        }
        Command::PoisonTrain => cmd_poison_train(&load_config(cli)?, &ctx),
        Command::Unlearn => cmd_unlearn(&load_config(cli)?, &ctx),
        Command::Hessian => cmd_hessian(&load_config(cli)?, &ctx),
        Command::Report => {
            cmd_report(&ctx)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("{failures} cell(s) failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) | Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
