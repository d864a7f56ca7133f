//! `ksum`: oracle building, training, summarization and evaluation for
//! knowledge-enhanced sports game summarization.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Stage, ValidationErrors};
use config::{Overrides, PipelineConfig};

#[derive(Parser)]
#[command(name = "ksum", version, about = "Knowledge-enhanced sports game summarization")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML configuration file; relative paths inside it resolve against its
    /// directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Artifact directory; overrides `paths.output`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    no_segment_embeddings: bool,
    #[arg(long, global = true)]
    no_knowledge_embeddings: bool,
    /// Skip link ids that resolve to nothing instead of failing.
    #[arg(long, global = true)]
    lenient: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Align news sentences to commentaries; writes pairs.jsonl and labels.jsonl.
    BuildOracle,
    /// Train the sentence selector; writes selector.json.
    TrainSelector,
    /// Train the rewriter on oracle pairs; writes rewriter.json.
    TrainRewriter,
    /// Select, link, rewrite and compose; writes summaries.jsonl.
    Summarize,
    /// Score summaries with ROUGE; writes scores.json.
    Evaluate {
        /// Summaries to score; defaults to the output directory's.
        #[arg(long)]
        summaries: Option<PathBuf>,
        /// Another run to compare against, as NAME=PATH. Repeatable.
        #[arg(long = "compare", value_parser = parse_variant)]
        variants: Vec<(String, PathBuf)>,
    },
    /// Token, word and sentence statistics; writes stats.json.
    Stats,
}

fn parse_variant(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.into(), path.into())),
        _ => Err(format!("expected NAME=PATH, got `{s}`")),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = cli.global;
    let overrides = Overrides {
        seed: g.seed,
        output: g.output,
        no_segment: g.no_segment_embeddings,
        no_knowledge: g.no_knowledge_embeddings,
        lenient: g.lenient,
    };
    let cfg = PipelineConfig::load(g.config.as_deref(), std::env::vars(), &overrides).map_err(ValidationErrors)?;
    let stage = match &cli.command {
        Command::BuildOracle => Stage::BuildOracle,
        Command::TrainSelector => Stage::TrainSelector,
        Command::TrainRewriter => Stage::TrainRewriter,
        Command::Summarize => Stage::Summarize,
        Command::Evaluate { .. } => Stage::Evaluate,
        Command::Stats => Stage::Stats,
    };
    commands::check(&cfg, stage)?;
    match cli.command {
        Command::BuildOracle => commands::build_oracle(&cfg),
        Command::TrainSelector => commands::train_selector_cmd(&cfg),
        Command::TrainRewriter => commands::train_rewriter_cmd(&cfg),
        Command::Summarize => commands::summarize(&cfg),
        Command::Evaluate { summaries, variants } => commands::evaluate(&cfg, summaries.as_deref(), &variants),
        Command::Stats => commands::stats(&cfg),
    }
}

/// Bad input data counts as a validation failure, like bad configuration.
fn is_validation(err: &anyhow::Error) -> bool {
    use ksum_core::Error as E;
    err.chain().any(|e| {
        e.is::<ValidationErrors>()
            || matches!(
                e.downcast_ref::<E>(),
                Some(E::Parse { .. } | E::Invalid(_) | E::Config(_) | E::DuplicateId(_) | E::DanglingLink { .. })
            )
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if let Some(v) = err.downcast_ref::<ValidationErrors>() {
                eprint!("error: {v}");
            } else {
                eprintln!("error: {err:#}");
            }
            ExitCode::from(if is_validation(&err) { 1 } else { 2 })
        }
    }
}
