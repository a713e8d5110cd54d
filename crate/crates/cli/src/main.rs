//! `effortcast`: ingest project data, build prompt corpora, drive fine-tune
//! and inference through an LLM provider, fit baseline regressors and
//! report MAE/RMSE.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error.

mod commands;
mod config;
mod inputs;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// A command-line mistake: bad flag combination, malformed override or
/// invalid configuration.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "effortcast", version, about = "Software effort estimation pipeline")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set split.seed=11`. Repeatable.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Dataset CSV, or dataset JSON from an earlier command.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Schema TOML for CSV input (defaults to the config, then the built-in ISBSG schema).
    #[arg(long, value_name = "PATH")]
    schema: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load a CSV and write it as dataset JSON.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank features by Pearson correlation with the target.
    Correlate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Keep records with at most N missing selected features.
    Stratify {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        max_missing: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded train/validation/test split.
    Split {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        train: Option<f64>,
        #[arg(long)]
        val: Option<f64>,
        #[arg(long)]
        test: Option<f64>,
        /// Split records with at most this many blanks train/test separately.
        #[arg(long)]
        pin_max_missing: Option<usize>,
        #[arg(long, requires = "pin_max_missing")]
        pin_train_frac: Option<f64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Render the prompt/completion corpus as JSONL.
    GenPrompts {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Submit a corpus for fine-tuning (or poll an existing job) and wait.
    Finetune {
        #[arg(long, required_unless_present = "job")]
        corpus: Option<PathBuf>,
        /// Job JSON from an earlier run to keep polling.
        #[arg(long, conflicts_with = "corpus")]
        job: Option<PathBuf>,
        #[arg(long)]
        provider: Option<config::ProviderKind>,
        /// Return right after submission.
        #[arg(long)]
        no_wait: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ask the model for an estimate of every record.
    Predict {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, conflicts_with = "job")]
        model: Option<String>,
        /// Use the result model of a finished fine-tune job.
        #[arg(long)]
        job: Option<PathBuf>,
        #[arg(long)]
        provider: Option<config::ProviderKind>,
        /// Scripted completions (JSON object id -> text) for `mock-scripted`.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit and score estimators; write metrics, comparison table and scatter data.
    Evaluate {
        /// Whole dataset, split per seed using the `split` settings.
        #[arg(long, conflicts_with_all = ["train"])]
        dataset: Option<PathBuf>,
        #[arg(long, requires = "test")]
        train: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Comma-separated: knn, linreg, svm, tree, forest, adaboost, elm, mlp, llm.
        #[arg(long, value_delimiter = ',')]
        estimators: Option<Vec<String>>,
        /// Predictions JSONL from `predict`, scored as estimator `llm`.
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long, conflicts_with = "seeds")]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Merge evaluation reports into comparison tables beside published reference values.
    Report {
        /// `reports.json` files written by `evaluate`.
        #[arg(long = "reports", value_delimiter = ',')]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.config.as_deref(), &cli.set, cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
