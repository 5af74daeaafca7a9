//! `normshift`: population synthesis, network generation, simulation,
//! analysis and reporting for the car-free-days experiment.
//!
//! Exit status: 0 success, 2 I/O or parse error (including bad arguments),
//! 3 invalid configuration, 4 runtime failure (sampling, convergence,
//! refused overwrite, inconsistent inputs).

mod commands;
mod fail;
mod manifest;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fail::{Failure, EXIT_IO};

#[derive(Debug, Parser)]
#[command(name = "normshift", version, about = "Commuter mode-choice simulation pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Scenario configuration (JSON). Built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the configuration's master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesise the population and write population.csv plus a summary.
    Synth {
        /// Seed table CSV replacing the configured one.
        #[arg(long)]
        seed_table: Option<PathBuf>,
        /// Marginal targets CSV replacing the configured ones.
        #[arg(long)]
        marginals: Option<PathBuf>,
    },
    /// Generate one replicate's social networks as edge lists.
    Net {
        #[arg(long, default_value_t = 0)]
        replicate: u32,
    },
    /// Simulate replicates x scenarios and write one trace file per run.
    Simulate {
        /// Population file (default: <out-dir>/population.csv).
        #[arg(long)]
        population: Option<PathBuf>,
        /// Replicate `n` or inclusive range `a..b` (default: every configured replicate).
        #[arg(long)]
        replicates: Option<String>,
        #[arg(long, value_delimiter = ',', default_values_t = vec!["control".to_string(), "cfd".to_string()])]
        scenarios: Vec<String>,
        /// Daily rainfall (date,mm) used to re-estimate the weather transitions.
        #[arg(long)]
        rainfall: Option<PathBuf>,
        /// Regenerate runs even when outputs already exist.
        #[arg(long)]
        force: bool,
    },
    /// Fit a binomial model to trace files and write a summary table.
    Analyze {
        /// Glob of trace files (default: <out-dir>/traces/*.csv).
        #[arg(long)]
        traces: Option<String>,
        /// 1: scenario intercepts; 2: scenario x Wednesday.
        #[arg(long, default_value_t = 2)]
        model: u32,
        /// Also fit each replicate separately.
        #[arg(long)]
        per_replicate: bool,
        /// Output table (default: <out-dir>/summary_model<k>.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit moving-average active-share series for plotting.
    Report {
        /// Glob of trace files (default: <out-dir>/traces/*.csv).
        #[arg(long)]
        traces: Option<String>,
        /// Summary table from `analyze`, copied into the metadata header.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Output file (default: <out-dir>/report.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_IO) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
