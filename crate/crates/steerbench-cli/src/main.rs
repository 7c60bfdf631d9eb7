//! `steerbench`: benchmark multiple-choice prompting strategies — dynamic
//! few-shot selection, self-generated explanations, choice-shuffle
//! ensembling — with deterministic offline simulation and cost accounting.

mod commands;
mod config;
mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::AppConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "steerbench", version, about = "Run-time LLM steering benchmark toolkit")]
struct Cli {
    /// JSON config file (endpoint, profiles, pricing, cache, concurrency).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect and prepare datasets.
    Dataset {
        #[command(subcommand)]
        command: DatasetCommand,
    },
    /// Generate gold-checked chain-of-thought exemplars over a pool.
    Curate {
        /// Pool dataset (JSONL).
        pool: PathBuf,
        /// Output exemplar store (JSONL).
        out: PathBuf,
        /// Model to generate explanations with.
        #[arg(long)]
        model: String,
        /// Replace the live gateway with a simulated model of this accuracy.
        #[arg(long, value_name = "P")]
        simulate: Option<f64>,
        /// Seed for the simulated model (default: config seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Treat corrupt replay-cache entries as misses and rewrite them.
        #[arg(long)]
        repair_cache: bool,
    },
    /// Build similarity indexes.
    Index {
        #[command(subcommand)]
        command: IndexCommand,
    },
    /// Run a strategy over a dataset and write a JSON report.
    Run {
        /// Evaluation dataset (JSONL).
        dataset: PathBuf,
        /// Strategy description (JSON).
        #[arg(long)]
        strategy: PathBuf,
        /// Report output path (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Also write a one-row comparison CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Replace the live gateway with a simulated model of this accuracy.
        #[arg(long, value_name = "P")]
        simulate: Option<f64>,
        /// Seed for the simulated model (default: config seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Treat corrupt replay-cache entries as misses and rewrite them.
        #[arg(long)]
        repair_cache: bool,
        /// Preprocessing spend (USD) to carry into the report.
        #[arg(long, default_value_t = 0.0)]
        preprocessing_cost: f64,
    },
    /// Compare run reports on the cost-accuracy plane.
    Pareto {
        /// Report files produced by `run`.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Comparison CSV output path.
        #[arg(long)]
        out: PathBuf,
        /// Add each report's preprocessing cost to its total.
        #[arg(long)]
        include_preprocessing: bool,
    },
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Check structural invariants; exit 0 iff the file is a valid dataset.
    Validate { path: PathBuf },
    /// Keep text-only, five-option, single-answer exam items.
    FilterJmle {
        /// Raw exam items (JSONL).
        input: PathBuf,
        /// Filtered dataset output (JSONL).
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum IndexCommand {
    /// Build an exact-search index from an embedding sidecar (JSONL).
    Build {
        /// Embedding sidecar: one {"item_id", "vector"} object per line.
        sidecar: PathBuf,
        /// Index output path (JSON).
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let config = AppConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Dataset { command } => match command {
            DatasetCommand::Validate { path } => commands::dataset_validate(&path),
            DatasetCommand::FilterJmle { input, out } => {
                commands::dataset_filter_jmle(&input, &out)
            }
        },
        Command::Curate { pool, out, model, simulate, seed, repair_cache } => commands::curate(
            &config,
            &pool,
            &out,
            &model,
            simulate,
            seed.unwrap_or(config.seed),
            repair_cache,
        ),
        Command::Index { command } => match command {
            IndexCommand::Build { sidecar, out } => commands::index_build(&sidecar, &out),
        },
        Command::Run {
            dataset,
            strategy,
            out,
            csv,
            simulate,
            seed,
            repair_cache,
            preprocessing_cost,
        } => commands::run(
            &config,
            &dataset,
            &strategy,
            &out,
            csv.as_deref(),
            simulate,
            seed.unwrap_or(config.seed),
            repair_cache,
            preprocessing_cost,
        ),
        Command::Pareto { reports, out, include_preprocessing } => {
            commands::pareto(&reports, &out, include_preprocessing)
        }
    }
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {:#}", e.error);
        std::process::exit(e.code);
    }
}
