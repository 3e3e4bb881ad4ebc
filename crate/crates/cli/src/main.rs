//! `scissor`: cluster-aware debiasing from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "scissor", version, about = "Detect label-imbalanced clusters in embeddings and remap them away")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// JSON config; unset fields keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "scissor-out")]
    out: PathBuf,
    /// Dataset format: jsonl or binary. Inferred from the extension when reading.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Clustering backend: mcl or kmeans.
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Remap backend: attention or mlp.
    #[arg(long, global = true)]
    remap: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a planted-bias synthetic dataset and its ground-truth blobs.
    Gen(commands::GenArgs),
    /// Cluster a dataset, group clusters by label balance and split ID/OOD.
    Cluster(commands::ClusterArgs),
    /// Hopkins clustering-tendency statistic of a dataset.
    Hopkins(commands::HopkinsArgs),
    /// Mine quadruplets from a clustering.
    Mine(commands::MineArgs),
    /// Train the remap network on a split.
    Train(commands::TrainArgs),
    /// Fit a linear head and score the ID and OOD test sets.
    Eval(commands::EvalArgs),
    /// Baseline versus debiased head, end to end.
    Experiment(commands::ExperimentArgs),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{message}")]
    Config { message: String, keys: Vec<String> },
    #[error(transparent)]
    Core(#[from] scissor::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn config(message: String) -> Self {
        CliError::Config { message, keys: Vec::new() }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            CliError::Config { message, keys } => json!({"error": {"kind": "config", "message": message, "keys": keys}}),
            CliError::Core(e) => json!({"error": {"kind": "runtime", "message": e.to_string()}}),
            CliError::Usage(m) => json!({"error": {"kind": "usage", "message": m}}),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(_) => 1,
            _ => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Usage(e.to_string().trim_end().to_string())),
    };
    let c = &cli.common;
    let result = match &cli.command {
        Command::Gen(a) => commands::gen(c, a),
        Command::Cluster(a) => commands::cluster(c, a),
        Command::Hopkins(a) => commands::hopkins(c, a),
        Command::Mine(a) => commands::mine(c, a),
        Command::Train(a) => commands::train(c, a),
        Command::Eval(a) => commands::eval(c, a),
        Command::Experiment(a) => commands::experiment(c, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code())
}
