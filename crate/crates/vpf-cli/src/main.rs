//! `vpf` — stage-per-command driver for the voting prediction pipeline.
//!
//! Stages hand off through files in a working directory so each one is
//! individually rerunnable: ingest -> enrich -> split -> train -> evaluate
//! -> explain -> report. All randomness flows from the command seeds;
//! derived sub-seeds are named functions of stage + seed.

mod commands;
mod demo;
mod logging;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Fatal input problem (missing file, malformed source): exit 2.
/// Contract violation between stages (artifact fingerprints): exit 3.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Contract(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Contract(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Contract(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "vpf",
    version,
    about = "Parliamentary roll-call vote prediction pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a country directory into canonical CSVs and repair missing values.
    Ingest {
        /// Directory with config.json and the per-dataset export files.
        country_dir: PathBuf,
        /// Output directory for canonical CSVs and logs.
        #[arg(long)]
        out: PathBuf,
    },
    /// Join votes with members/bills/protocols, compute features, and encode.
    Enrich {
        /// Directory holding canonical CSVs (output of `ingest`).
        dir: PathBuf,
        /// Country config file.
        #[arg(long)]
        config: PathBuf,
        /// Optional precomputed bill embeddings (bill_id, v0..v{D-1}).
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Output directory for enriched + matrix artifacts.
        #[arg(long)]
        out: PathBuf,
    },
    /// Chronological train/test split of the encoded matrix.
    Split {
        /// Directory holding feature matrix artifacts.
        dir: PathBuf,
        /// Target training fraction.
        #[arg(long, default_value_t = 0.75)]
        target: f64,
    },
    /// Train one or more learners on the training rows.
    Train {
        dir: PathBuf,
        /// Comma-separated learner kinds (decision_tree, random_forest,
        /// gradient_boosted_trees, gaussian_naive_bayes).
        #[arg(long)]
        learner: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate trained models on the test rows and pick a champion.
    Evaluate {
        dir: PathBuf,
        /// Comma-separated learner kinds or model file paths.
        #[arg(long)]
        models: String,
    },
    /// Shapley attributions and the false-negative anomaly report.
    Explain {
        dir: PathBuf,
        /// Model artifact to explain.
        #[arg(long)]
        model: PathBuf,
        /// Permutation samples per explained row.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Background rows drawn from the training set.
        #[arg(long, default_value_t = 100)]
        background: usize,
        /// Explain at most this many test rows (default: all).
        #[arg(long)]
        max_rows: Option<usize>,
    },
    /// Consolidate stage outputs into report.json + report.txt.
    Report { dir: PathBuf },
    /// Write a small self-contained demo country for trying the pipeline.
    Demo {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest { country_dir, out } => commands::ingest(&country_dir, &out),
        Command::Enrich {
            dir,
            config,
            embeddings,
            out,
        } => commands::enrich(&dir, &config, embeddings.as_deref(), &out),
        Command::Split { dir, target } => commands::split(&dir, target),
        Command::Train { dir, learner, seed } => commands::train(&dir, &learner, seed),
        Command::Evaluate { dir, models } => commands::evaluate(&dir, &models),
        Command::Explain {
            dir,
            model,
            samples,
            seed,
            background,
            max_rows,
        } => commands::explain(&dir, &model, samples, seed, background, max_rows),
        Command::Report { dir } => commands::report(&dir),
        Command::Demo { out, seed } => demo::write_demo_country(&out, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vpf: error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
