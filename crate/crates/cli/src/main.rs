//! `ars-engine`: batch front-end over the ARS engine's file formats.

mod backends;
mod commands;
mod failure;
mod serve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::failure::Failure;

const SCHEMAS: &str = "\
File formats (all JSONL files are UTF-8, one JSON object per line):
  corpus      {\"image_id\": str, \"aesthetic_score\": num|null, \"comments\": [{\"comment_id\": str, \"text\": str}]}
  sentiment   {\"text\": str, \"positive\": num, \"negative\": num}
  embeddings  {\"text\": str, \"vector\": [num, ...]}
  scores      {\"text\": str, \"score\": num}
  labels      {\"image_id\", \"comment_id\", \"sentence_index\", \"text\", \"a\", \"l\", \"o\", \"s\", \"tfidf\", \"ars\"}
  candidates  {\"text\": str, \"confidence\": num}
  selection   {\"text\": str, \"ars\": num, \"group_size\": int, \"rank\": int}
  log-probs   {\"image_id\", \"comment_id\", \"sentence_index\", \"log_probs\": [num, ...]}
  weights     {\"key\": [image_id, comment_id, sentence_index], \"weight\": num}
  word lists  plain text, one entry per line, '#' starts a comment line

Provider backends:
  --sentiment lexicon | file:PATH | process:COMMAND
  --embed     hashed[:DIM] | file:PATH | process:COMMAND
  Process protocol: the process prints {\"proto\":1,\"dim\":int|null}, then answers each
  request line {\"op\":\"sentiment\"|\"embed\",\"text\":str} with one line
  {\"positive\":num,\"negative\":num} or {\"vector\":[num,...]}.

Exit codes: 0 success, 2 input/schema error, 3 provider error, 4 degenerate statistics.
ARS_ENGINE_THREADS caps worker threads and provider processes.";

#[derive(Debug, Parser)]
#[command(name = "ars-engine", version, about = "Aesthetic relevance scoring, weighted loss and diverse caption selection", after_long_help = SCHEMAS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScaleArg {
    Stddev,
    Variance,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TauPopulationArg {
    Pairs,
    Occurrences,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RuleArg {
    Leq,
    Geq,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GroupingArg {
    Leader,
    Components,
}

#[derive(Debug, clap::Args)]
pub struct ProviderArgs {
    /// Sentiment backend: lexicon, file:PATH or process:COMMAND.
    #[arg(long, default_value = "lexicon")]
    pub sentiment: String,
    /// Aesthetic word list; the built-in list when omitted.
    #[arg(long)]
    pub aw: Option<PathBuf>,
    /// Object word list; the built-in list when omitted.
    #[arg(long)]
    pub ow: Option<PathBuf>,
    /// Seconds to wait for a provider process reply.
    #[arg(long, default_value_t = 30)]
    pub provider_timeout: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate and normalize a corpus file.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Freeze length and tf-idf statistics of a corpus.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "stddev")]
        scale: ScaleArg,
        /// Logarithm base of the idf term: e, 10 or 2.
        #[arg(long, default_value = "e")]
        log_base: String,
        #[arg(long, value_enum, default_value = "pairs")]
        tau_population: TauPopulationArg,
    },
    /// Label every corpus sentence with its ARS.
    Label {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        stats: PathBuf,
        #[command(flatten)]
        providers: ProviderArgs,
        #[arg(long)]
        out: PathBuf,
        /// Skip sentences whose provider lookups fail instead of aborting.
        #[arg(long)]
        lenient: bool,
        /// Write the label mean and standard deviation back into the stats file.
        #[arg(long)]
        freeze_ars: bool,
        /// Accept stats frozen from a different corpus.
        #[arg(long)]
        force: bool,
        /// Also write the label summary to this file.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Select labels above or below a multiple of the ARS spread.
    Partition {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        stats: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, value_enum)]
        rule: RuleArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pick diverse, aesthetically relevant captions from generator candidates.
    Select {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        stats: PathBuf,
        #[arg(long, default_value_t = ars_core::dacs::DEFAULT_SIMILARITY_THRESHOLD)]
        threshold: f64,
        /// Minimum group mean ARS: "auto" uses the frozen training mean.
        #[arg(long, default_value = "auto", allow_negative_numbers = true)]
        floor: String,
        /// Embedding backend: hashed[:DIM], file:PATH or process:COMMAND.
        #[arg(long, default_value = "hashed")]
        embed: String,
        /// Representative scorer: ars or file:PATH.
        #[arg(long, default_value = "ars")]
        scorer: String,
        #[arg(long)]
        blacklist: Option<PathBuf>,
        #[arg(long)]
        max_outputs: Option<usize>,
        #[arg(long, value_enum, default_value = "leader")]
        grouping: GroupingArg,
        #[command(flatten)]
        providers: ProviderArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// ARS-weighted cross-entropy of generator log-probabilities.
    Loss {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        logprobs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the joined per-sentence weights.
        #[arg(long)]
        weights_out: Option<PathBuf>,
    },
    /// ARS histogram as CSV.
    Report {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        bin_width: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the built-in sentiment and embedding fallbacks over the process
    /// protocol on stdin/stdout.
    Serve {
        #[arg(long, default_value_t = ars_core::providers::DEFAULT_HASHED_DIM)]
        dim: usize,
    },
}

fn threads_from_env() -> Option<usize> {
    std::env::var("ARS_ENGINE_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Ingest { corpus, out } => commands::ingest(&corpus, &out),
        Command::Stats {
            corpus,
            out,
            scale,
            log_base,
            tau_population,
        } => commands::stats(&corpus, &out, scale, &log_base, tau_population),
        Command::Label {
            corpus,
            stats,
            providers,
            out,
            lenient,
            freeze_ars,
            force,
            summary,
        } => commands::label(commands::LabelArgs {
            corpus,
            stats,
            providers,
            out,
            lenient,
            freeze_ars,
            force,
            summary,
        }),
        Command::Partition {
            labels,
            stats,
            alpha,
            rule,
            out,
        } => commands::partition(&labels, &stats, alpha, rule, &out),
        Command::Select {
            candidates,
            stats,
            threshold,
            floor,
            embed,
            scorer,
            blacklist,
            max_outputs,
            grouping,
            providers,
            out,
        } => commands::select(commands::SelectArgs {
            candidates,
            stats,
            threshold,
            floor,
            embed,
            scorer,
            blacklist,
            max_outputs,
            grouping,
            providers,
            out,
        }),
        Command::Loss {
            labels,
            logprobs,
            out,
            weights_out,
        } => commands::loss(&labels, &logprobs, &out, weights_out.as_deref()),
        Command::Report {
            labels,
            bin_width,
            out,
        } => commands::report(&labels, bin_width, &out),
        Command::Serve { dim } => serve::serve(dim),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = threads_from_env() {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size thread pool: {e}");
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
