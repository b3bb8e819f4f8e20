mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub const OUT_DIR_ENV: &str = "LINKBIAS_OUT_DIR";

/// Exposure to diverse information on partitioned hyperlink networks.
#[derive(Debug, Parser)]
#[command(name = "linkbias", version, propagate_version = true)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a topic network artifact from an edge list and partitions.
    Build(BuildArgs),
    /// Navigation-model exposure reports for every (CwP model, alpha) pair.
    Exposure(ExposureArgs),
    /// Structural statistics, random baselines and connectivity tests.
    Stats(StatsArgs),
    /// Write a planted synthetic dataset in the input formats.
    Fixture(FixtureArgs),
    /// Print the version.
    Version,
}

#[derive(Debug, Args)]
pub struct Common {
    /// `key = value` file; command-line flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Output directory [env: LINKBIAS_OUT_DIR, default: .]
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub common: Common,

    /// Link list, `src \t dst [\t rank]`.
    #[arg(long)]
    pub edges: Option<PathBuf>,

    /// Partition file, `name \t {P|PBAR}`.
    #[arg(long, conflicts_with = "categories")]
    pub partitions: Option<PathBuf>,

    /// Category file, `parent \t {subcat|member} \t child`, to mine partitions from.
    #[arg(long)]
    pub categories: Option<PathBuf>,

    #[arg(long)]
    pub seed_p: Option<String>,

    #[arg(long)]
    pub seed_pbar: Option<String>,

    /// Keywords a P category name must contain (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub keywords_p: Vec<String>,

    #[arg(long, value_delimiter = ',')]
    pub keywords_pbar: Vec<String>,

    /// Clickstream periods to average (comma-separated or repeated).
    #[arg(long, value_delimiter = ',')]
    pub clickstream: Vec<PathBuf>,

    #[arg(long)]
    pub topic: Option<String>,

    #[arg(long)]
    pub label_p: Option<String>,

    #[arg(long)]
    pub label_pbar: Option<String>,

    /// Artifact path [default: <out-dir>/<topic>.network]
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExposureArgs {
    #[command(flatten)]
    pub common: Common,

    /// Network artifact from `build`.
    #[arg(long)]
    pub network: Option<PathBuf>,

    /// CwP models: uniform, position, clicks [default: all]
    #[arg(long, value_delimiter = ',')]
    pub cwp: Vec<String>,

    /// Restart probabilities [default: 0,0.25,0.5,0.75,1]
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,

    /// Session length L [default: 10]
    #[arg(long)]
    pub clicks: Option<usize>,

    /// Smoothing count for links absent from the clickstream [default: 10]
    #[arg(long)]
    pub smoothing: Option<f64>,

    /// Bootstrap replicates for adjusted exposure; 0 disables [default: 0]
    #[arg(long)]
    pub bootstrap: Option<usize>,

    /// Confidence level of the bootstrap interval [default: 0.9]
    #[arg(long)]
    pub gamma: Option<f64>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Also report the long-session limit.
    #[arg(long)]
    pub convergence: bool,

    /// Report formats: json, csv, svg [default: json,csv]
    #[arg(long, value_delimiter = ',')]
    pub format: Vec<String>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub common: Common,

    #[arg(long)]
    pub network: Option<PathBuf>,

    /// Rewired samples for the random baseline [default: 30]
    #[arg(long)]
    pub samples: Option<usize>,

    /// Swap attempts per sample [default: 10 per link]
    #[arg(long)]
    pub swaps: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Bootstrap replicates of the Welch tests [default: 1000]
    #[arg(long)]
    pub welch_replicates: Option<usize>,

    /// Correlate homophily with exposure at this click.
    #[arg(long)]
    pub homophily_step: Option<usize>,

    /// CwP model for the homophily correlation [default: uniform]
    #[arg(long)]
    pub cwp: Option<String>,

    /// Restart probability for the homophily correlation [default: 0]
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Also write per-figure CSV files.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[command(flatten)]
    pub common: Common,

    #[arg(long)]
    pub topic: Option<String>,

    #[arg(long)]
    pub p_nodes: Option<usize>,

    #[arg(long)]
    pub pbar_nodes: Option<usize>,

    #[arg(long)]
    pub neighbor_nodes: Option<usize>,

    #[arg(long)]
    pub rest_nodes: Option<usize>,

    #[arg(long)]
    pub out_degree: Option<usize>,

    /// Share of topic-directed links that cross partitions.
    #[arg(long)]
    pub across_fraction: Option<f64>,

    #[arg(long)]
    pub neighbor_fraction: Option<f64>,

    #[arg(long)]
    pub click_coverage: Option<f64>,

    #[arg(long)]
    pub seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }

    let result = match cli.command {
        Command::Build(a) => commands::build(a),
        Command::Exposure(a) => commands::exposure(a),
        Command::Stats(a) => commands::stats(a),
        Command::Fixture(a) => commands::fixture(a),
        Command::Version => {
            println!("linkbias {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
