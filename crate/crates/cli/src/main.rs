//! `gapsaw` — generate gapped-puzzle instances, train the reassembly
//! agent, solve single puzzles, and run benchmark sweeps.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime
//! error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Runtime(m) => m,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config error",
            CliError::Data(_) => "data error",
            CliError::Runtime(_) => "runtime error",
        }
    }
}

#[derive(Parser)]
#[command(
    name = "gapsaw",
    version,
    about = "Reassembly engine and benchmark harness for jigsaw puzzles with eroded gaps"
)]
struct Cli {
    /// Experiment config file (TOML).
    #[arg(long, global = true, default_value = "gapsaw.toml")]
    config: PathBuf,

    /// Override the config's seed list with a single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Restrict to one solver (benchmark) or choose the solver (solve).
    #[arg(long, global = true)]
    solver: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Slice every corpus image into shuffled puzzle instances.
    Generate,
    /// Train the agent on the generated instances.
    Train {
        /// Continue from the existing checkpoint instead of starting fresh.
        #[arg(long)]
        resume: bool,
        /// Train at most this many episodes in this invocation (the config's
        /// iteration count remains the overall target).
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Solve one instance and write the reassembled image plus a report.
    Solve {
        /// Instance directory to solve.
        #[arg(long)]
        instance: PathBuf,
        /// Checkpoint path (defaults to <out_dir>/checkpoint.bin).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Run every configured solver over every instance and emit tables.
    Benchmark {
        /// Checkpoint path (defaults to <out_dir>/checkpoint.bin).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = ExperimentConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.seeds = vec![seed];
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", config.out_dir.display())))?;
    // Every run copies its config next to its outputs, so a result
    // directory is reproducible from itself.
    std::fs::copy(&cli.config, config.out_dir.join("config.toml"))
        .map_err(|e| CliError::Data(format!("cannot copy config: {e}")))?;

    match cli.command {
        Command::Generate => commands::generate::run(&config),
        Command::Train { resume, episodes } => commands::train::run(&config, resume, episodes),
        Command::Solve {
            instance,
            checkpoint,
        } => commands::solve::run(&config, &instance, checkpoint, cli.solver.as_deref()),
        Command::Benchmark { checkpoint } => {
            commands::benchmark::run(&config, checkpoint, cli.solver.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("gapsaw: {}: {}", err.kind(), err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
