use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "gea", version, about = "Proxy-guided aging evolution on a tabular cell search space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one method with one configuration over several seeds.
    Search(RunArgs),
    /// Sweep one search parameter, one value at a time.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        /// Search parameter to vary, e.g. removal_mode or pop_size.
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values for --param.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
    },
    /// Synthetic benchmark utilities.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
    /// Zero-cost proxy score of one architecture string.
    Score {
        /// Canonical architecture string.
        arch: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Raw CIFAR-10 binary batch file; a synthetic batch is used otherwise.
        #[arg(long)]
        batch: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Significance and rank-correlation tests on result files.
    Stats {
        #[command(subcommand)]
        command: StatsCommand,
    },
}

#[derive(Debug, Subcommand)]
enum BenchCommand {
    /// Generate a complete synthetic benchmark file.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        noise_std: f64,
        #[arg(long, default_value_t = 0.5)]
        interaction_std: f64,
        /// Kendall tau between the stored proxy and validation accuracy.
        #[arg(long, default_value_t = 0.6)]
        proxy_tau: f64,
        #[arg(long, default_value = "synthetic")]
        dataset: String,
    },
}

#[derive(Debug, Subcommand)]
enum StatsCommand {
    /// Welch's two-sided t-test between two samples.
    Welch {
        a: PathBuf,
        b: PathBuf,
        /// Sweep label to read from summary files.
        #[arg(long)]
        label: Option<String>,
    },
    /// Kendall tau-b between two paired samples.
    Tau {
        x: PathBuf,
        y: PathBuf,
        #[arg(long)]
        label: Option<String>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML experiment configuration; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["gea", "rea", "rs"])]
    method: Option<String>,
    #[arg(long)]
    pop_size: Option<usize>,
    #[arg(long)]
    tournament: Option<usize>,
    #[arg(long)]
    cycles: Option<usize>,
    #[arg(long)]
    gen_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// Tabular benchmark file; a synthetic benchmark is generated otherwise.
    #[arg(long)]
    benchmark: Option<PathBuf>,
    /// Raw CIFAR-10 binary batch file for Jacobian scoring.
    #[arg(long)]
    batch: Option<PathBuf>,
    /// Output directory for curves.csv and summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Score children and run seeds on one thread.
    #[arg(long)]
    sequential: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", commands::error_line(&e));
            ExitCode::FAILURE
        }
    }
}
