//! Command-line runner: `optimize`, `sort` and `oracle`.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use growthflow::sorting::SortMode;

#[derive(Parser, Debug)]
#[command(name = "growthflow", version, about = "Growth-transform global optimization and decentralized sorting")]
struct Cli {
    /// Worker threads for per-cell work; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the dynamics and write trace, snapshots and report.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Dump the full driver at this step (repeatable).
        #[arg(long = "snapshot")]
        snapshots: Vec<u64>,
    },
    /// Sort a CSV of values with the agent/substrate simulator.
    Sort {
        /// One value per line.
        #[arg(long)]
        values: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Linear)]
        mode: ModeArg,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive argmin of the configured objective, as JSON on stdout.
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Linear,
    Constant,
}

impl From<ModeArg> for SortMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Linear => SortMode::Linear,
            ModeArg::Constant => SortMode::Constant,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GROWTHFLOW_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build_global() {
        log::warn!("could not size the thread pool: {e}");
    }
    let parallel = cli.threads > 1;
    let result = match cli.command {
        Command::Optimize { config, out, seed, snapshots } => {
            commands::optimize(&config, out.as_deref(), seed, &snapshots, parallel)
        }
        Command::Sort { values, mode, config, out } => {
            commands::sort(&values, mode.into(), config.as_deref(), out.as_deref())
        }
        Command::Oracle { config } => commands::oracle(&config),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::EXIT_CONFIG)
        }
    }
}
