mod config;
mod demo;
mod manifest;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use arousal_core::embedding::TrainMode;
use arousal_core::lexicon::Weighting;
use clap::{Parser, Subcommand};

use config::PipelineConfig;
use pipeline::Pipeline;

/// Domain-specific arousal lexicon construction and issue scoring.
#[derive(Debug, Parser)]
#[command(name = "arousal", version)]
struct Cli {
    /// TOML pipeline configuration.
    #[arg(long, global = true, env = "AROUSAL_CONFIG")]
    config: Option<PathBuf>,
    /// Artifact directory. Overrides `paths.work_dir`; default ./arousal-work.
    #[arg(long, global = true)]
    work_dir: Option<PathBuf>,
    /// Overrides the embedding seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Single-threaded bit-reproducible embedding training.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse the issue corpus and build the vocabulary.
    Ingest {
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Count co-occurrences and train word vectors.
    Train,
    /// Print the nearest neighbors of a word.
    Neighbors {
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// Select high and low arousal seed words.
    Seeds {
        #[arg(long)]
        general: Option<PathBuf>,
        #[arg(long)]
        seed_list: Option<PathBuf>,
    },
    /// Expand seeds through WordNet synonyms and embedding neighbors.
    Expand {
        #[arg(long)]
        wordnet: Option<PathBuf>,
    },
    /// Apply review decisions and write the rating sheet.
    Sheet {
        /// CSV of `word,accept|reject` decisions.
        #[arg(long, conflicts_with = "accept_all")]
        review: Option<PathBuf>,
        /// Accept every candidate.
        #[arg(long)]
        accept_all: bool,
        /// Shuffle rows with this seed.
        #[arg(long)]
        shuffle: Option<u64>,
    },
    /// Ingest filled rating sheets.
    Ratings {
        /// `rater=path`, once per rater.
        #[arg(long = "sheet", required = true)]
        sheets: Vec<String>,
    },
    /// Report inter-rater agreement.
    Agreement {
        #[arg(long)]
        weighting: Option<Weighting>,
    },
    /// Build the domain lexicon from the ratings.
    Build,
    /// Score every issue text in every available mode.
    Score {
        #[arg(long)]
        general: Option<PathBuf>,
        /// Use this domain lexicon instead of the built one.
        #[arg(long)]
        sea: Option<PathBuf>,
    },
    /// Compare score distributions across priority levels.
    Evaluate,
    /// Run the whole pipeline on a synthetic corpus.
    Demo {
        #[arg(long, default_value_t = 200)]
        issues_per_priority: usize,
        /// Directory for demo inputs and artifacts.
        #[arg(long, default_value = "arousal-demo")]
        dir: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.embedding.seed = seed;
    }
    if cli.deterministic {
        cfg.embedding.mode = TrainMode::Deterministic;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<String> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    if let Command::Demo {
        issues_per_priority,
        dir,
    } = &cli.command
    {
        return demo::run(dir, *issues_per_priority);
    }
    let cfg = load_config(&cli)?;
    let work_dir = cli
        .work_dir
        .clone()
        .or_else(|| cfg.paths.work_dir.clone())
        .unwrap_or_else(|| PathBuf::from("arousal-work"));
    let mut pipe = Pipeline::open(cfg, work_dir)?;
    match cli.command {
        Command::Ingest { corpus } => pipe.ingest(corpus),
        Command::Train => pipe.train(),
        Command::Neighbors { word, k } => pipe.neighbors(&word, k),
        Command::Seeds { general, seed_list } => pipe.seeds(general, seed_list),
        Command::Expand { wordnet } => pipe.expand(wordnet),
        Command::Sheet {
            review,
            accept_all,
            shuffle,
        } => pipe.sheet(review, accept_all, shuffle),
        Command::Ratings { sheets } => pipe.ratings(&sheets),
        Command::Agreement { weighting } => pipe.agreement(weighting),
        Command::Build => pipe.build(),
        Command::Score { general, sea } => pipe.score(general, sea),
        Command::Evaluate => pipe.evaluate(),
        Command::Demo { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            if !out.is_empty() && !out.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
