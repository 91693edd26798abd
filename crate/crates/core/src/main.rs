//! Command-line front end for the score-weighted Lasso pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use llm_lasso::error::PipelineError;
use llm_lasso::pipeline::{
    apply_override, cmd_baselines, cmd_collect_scores, cmd_evaluate, cmd_rag_index, cmd_rag_query,
    cmd_rag_recall, cmd_run, cmd_simulate_adversarial, RunConfig,
};
use llm_lasso::retrieval::ChunkConfig;

#[derive(Parser)]
#[command(
    name = "llm-lasso",
    version,
    about = "Sparse regression with language-model-derived penalty factors",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every config-driven subcommand.
#[derive(Args)]
struct ConfigArgs {
    /// JSON run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Override one config key, e.g. --set splits.n_splits=5 or
    /// --set scores.source.kind=stub_constant. Values parse as JSON when
    /// possible, otherwise as strings. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Shorthand for --set output.dir=<DIR>.
    #[arg(short, long)]
    output: Option<String>,
    /// Shorthand for --set seed=<SEED>.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, PipelineError> {
        let raw = std::fs::read_to_string(&self.config).map_err(|e| PipelineError::Io {
            path: self.config.display().to_string(),
            source: e,
        })?;
        let mut value: serde_json::Value = serde_json::from_str(&raw).map_err(|e| {
            PipelineError::Config(format!("{}: {e}", self.config.display()))
        })?;
        for pair in &self.overrides {
            let (key, val) = pair.split_once('=').ok_or_else(|| {
                PipelineError::Config(format!("--set {pair:?} is not KEY=VALUE"))
            })?;
            apply_override(&mut value, key, val)?;
        }
        if let Some(dir) = &self.output {
            apply_override(&mut value, "output.dir", dir)?;
        }
        if let Some(seed) = self.seed {
            apply_override(&mut value, "seed", &seed.to_string())?;
        }
        RunConfig::from_value(value)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Collect penalty scores and run the full pipeline: transform
    /// selection, final paths, test curves, comparison artifacts.
    Run(ConfigArgs),
    /// Run the pipeline using only cached or file-based scores; never
    /// contacts a score provider.
    Evaluate(ConfigArgs),
    /// Collect penalty scores and write them to a JSON file.
    CollectScores {
        #[command(flatten)]
        config: ConfigArgs,
        /// Destination for the collected scores.
        #[arg(long, default_value = "scores.json")]
        out: PathBuf,
    },
    /// Replace a fraction of feature names with random identifiers before
    /// scoring, then run the pipeline; checks that transform selection
    /// falls back to plain weights when scores carry no signal.
    SimulateAdversarial {
        #[command(flatten)]
        config: ConfigArgs,
        /// Fraction of feature names to corrupt, in [0, 1].
        #[arg(long)]
        fraction: f64,
        /// Extra names (one per line) the corrupted identifiers must avoid.
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    /// Rank features with the reference methods (mutual information, RFE,
    /// mRMR, random, lasso entry order) and trace their test curves.
    Baselines(ConfigArgs),
    /// Build and query the chunked vector store used to ground prompts.
    Rag {
        #[command(subcommand)]
        command: RagCommand,
    },
}

#[derive(Subcommand)]
enum RagCommand {
    /// Chunk and embed every .txt/.md file in a directory.
    Index {
        /// Directory of documents.
        #[arg(long)]
        docs: PathBuf,
        /// Directory to write the store into.
        #[arg(long)]
        store: PathBuf,
        /// Embedding dimension.
        #[arg(long, default_value_t = 512)]
        dim: usize,
        /// Maximum characters per chunk.
        #[arg(long, default_value_t = 1000)]
        max_chars: usize,
        /// Characters shared between consecutive chunks.
        #[arg(long, default_value_t = 200)]
        overlap: usize,
    },
    /// Print the top-k chunks for a query.
    Query {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(short, long, default_value_t = 3)]
        k: usize,
    },
    /// Measure top-k recall against a brute-force oracle.
    Recall {
        #[arg(long)]
        store: PathBuf,
        /// File with one query per line.
        #[arg(long)]
        queries: PathBuf,
        /// Comma-separated k values.
        #[arg(short, long, default_value = "1,3,5,10", value_delimiter = ',')]
        k: Vec<usize>,
    },
}

fn print_json(value: &impl serde::Serialize) {
    match serde_json::to_string_pretty(value) {
        Ok(s) => println!("{s}"),
        Err(e) => eprintln!("error rendering output: {e}"),
    }
}

fn dispatch(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.load()?;
            let summary = cmd_run(&cfg)?;
            print_json(&summary);
        }
        Command::Evaluate(args) => {
            let cfg = args.load()?;
            let summary = cmd_evaluate(&cfg)?;
            print_json(&summary);
        }
        Command::CollectScores { config, out } => {
            let cfg = config.load()?;
            let summary = cmd_collect_scores(&cfg, &out)?;
            print_json(&summary);
        }
        Command::SimulateAdversarial {
            config,
            fraction,
            registry,
        } => {
            let cfg = config.load()?;
            let summary = cmd_simulate_adversarial(&cfg, fraction, registry.as_deref())?;
            print_json(&summary);
        }
        Command::Baselines(args) => {
            let cfg = args.load()?;
            let summary = cmd_baselines(&cfg)?;
            print_json(&summary);
        }
        Command::Rag { command } => match command {
            RagCommand::Index {
                docs,
                store,
                dim,
                max_chars,
                overlap,
            } => {
                let chunker = ChunkConfig { max_chars, overlap };
                let summary = cmd_rag_index(&docs, &store, dim, chunker)?;
                print_json(&summary);
            }
            RagCommand::Query { store, query, k } => {
                let hits = cmd_rag_query(&store, &query, k)?;
                print_json(&hits);
            }
            RagCommand::Recall { store, queries, k } => {
                let raw = std::fs::read_to_string(&queries).map_err(|e| PipelineError::Io {
                    path: queries.display().to_string(),
                    source: e,
                })?;
                let query_list: Vec<String> = raw
                    .lines()
                    .map(|l| l.trim().to_string())
                    .filter(|l| !l.is_empty())
                    .collect();
                let recall = cmd_rag_recall(&store, &query_list, &k)?;
                let doc: Vec<serde_json::Value> = recall
                    .into_iter()
                    .map(|(k, r)| serde_json::json!({"k": k, "recall": r}))
                    .collect();
                print_json(&doc);
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
