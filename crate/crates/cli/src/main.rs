//! `conexp`: stage-by-stage course concept expansion.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error,
//! 3 a required artifact of an earlier stage is missing.

mod config;
mod manifest;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{Config, Overrides};
use stages::{Ctx, SweepParam};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    MissingArtifact(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::MissingArtifact(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::MissingArtifact(m) => write!(f, "missing artifact: {m}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "conexp", version, about = "Course concept expansion pipeline")]
struct Cli {
    /// TOML config; flags and CONEXP_* variables override its values.
    #[arg(long, global = true, env = "CONEXP_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "CONEXP_CORPUS")]
    corpus: Option<PathBuf>,
    #[arg(long, global = true, env = "CONEXP_KB")]
    kb: Option<PathBuf>,
    #[arg(long, global = true, env = "CONEXP_EMBEDDINGS")]
    embeddings: Option<PathBuf>,
    #[arg(long, global = true, env = "CONEXP_LABELS")]
    labels: Option<PathBuf>,
    /// Directory for stage artifacts and the manifest.
    #[arg(long, short, global = true, env = "CONEXP_OUTPUT")]
    output: Option<PathBuf>,
    /// Seeds per cluster.
    #[arg(long, global = true, env = "CONEXP_TAU")]
    tau: Option<usize>,
    /// Share of the ranking kept in place by the rerank.
    #[arg(long, global = true, env = "CONEXP_ALPHA")]
    alpha: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    Map,
    Cr,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate candidates from the knowledge base (candidates.jsonl).
    Expand {
        /// Stop after this many search waves.
        #[arg(long)]
        max_waves: Option<usize>,
    },
    /// Train the search path autoencoder on the candidate paths (encoder.json).
    TrainEncoder,
    /// Build features and train or apply the P/N classifier (features.csv, classifier.json, predictions.jsonl).
    Classify {
        /// Apply this classifier checkpoint instead of training one.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Partially rerank the candidates by predicted label (ranking.jsonl).
    Rerank,
    /// MAP of the ranking and baselines on the test split, or the correction rate.
    Evaluate {
        #[arg(long, value_enum, default_value = "map")]
        metric: Metric,
        /// Cutoff for the correction rate.
        #[arg(long)]
        n: Option<usize>,
        /// Deletion event log (JSONL) for the correction rate.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// MAP over a grid of tau or alpha values (sweep.csv).
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values; defaults to 0..1 by 0.1 for alpha and 1..10 for tau.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
    },
    /// One feedback iteration from a deletion event log (ranking.optimized.jsonl).
    Optimize {
        #[arg(long)]
        events: PathBuf,
    },
    /// Run the game server; port 0 picks a free port, printed on stdout.
    Serve {
        #[arg(long, env = "CONEXP_PORT")]
        port: Option<u16>,
        #[arg(long)]
        host: Option<String>,
        #[arg(long)]
        state_dir: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let max_waves = match &cli.command {
        Command::Expand { max_waves } => *max_waves,
        _ => None,
    };
    let over = Overrides {
        corpus: cli.corpus,
        kb: cli.kb,
        embeddings: cli.embeddings,
        labels: cli.labels,
        output: cli.output,
        tau: cli.tau,
        alpha: cli.alpha,
        max_waves,
    };
    let config = Config::load(cli.config.as_deref(), &over)?;
    match cli.command {
        Command::Serve { port, host, state_dir } => stages::serve(config, host, port, state_dir),
        command => {
            let ctx = Ctx::load(config)?;
            match command {
                Command::Expand { .. } => stages::expand(&ctx),
                Command::TrainEncoder => stages::train_encoder_stage(&ctx),
                Command::Classify { model } => stages::classify(&ctx, model.as_deref()),
                Command::Rerank => stages::rerank(&ctx),
                Command::Evaluate { metric: Metric::Map, .. } => stages::evaluate_map(&ctx),
                Command::Evaluate { metric: Metric::Cr, n, events } => {
                    let n = n.ok_or_else(|| CliError::Config("--metric cr needs --n".into()))?;
                    let events = events.ok_or_else(|| CliError::Config("--metric cr needs --events".into()))?;
                    stages::evaluate_cr(&ctx, n, &events)
                }
                Command::Sweep { param, grid } => stages::sweep(&ctx, param, &grid),
                Command::Optimize { events } => stages::optimize(&ctx, &events),
                Command::Serve { .. } => unreachable!(),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
