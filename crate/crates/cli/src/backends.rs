//! Construction of providers from `kind[:argument]` specifiers.

use std::time::Duration;

use ars_core::lexicon::{load_wordlist, Lexicons, WordList, WordListKind};
use ars_core::providers::{
    EmbeddingProvider, EmbeddingTable, HashedEmbedder, LexiconSentiment, ProcessProvider,
    SentimentProvider, SentimentTable, DEFAULT_HASHED_DIM,
};

use crate::failure::Failure;
use crate::ProviderArgs;

/// Provider processes started per backend.
fn process_workers() -> usize {
    crate::threads_from_env().unwrap_or(1)
}

fn split_spec(spec: &str) -> (&str, Option<&str>) {
    match spec.split_once(':') {
        Some((kind, arg)) => (kind, Some(arg)),
        None => (spec, None),
    }
}

fn required<'a>(flag: &str, kind: &str, arg: Option<&'a str>) -> Result<&'a str, Failure> {
    arg.filter(|a| !a.is_empty())
        .ok_or_else(|| Failure::input(format!("--{flag} {kind}: missing argument after ':'")))
}

pub fn sentiment(args: &ProviderArgs) -> Result<Box<dyn SentimentProvider>, Failure> {
    let timeout = Duration::from_secs(args.provider_timeout);
    match split_spec(&args.sentiment) {
        ("lexicon", None) => Ok(Box::new(LexiconSentiment::builtin())),
        ("file", arg) => Ok(Box::new(SentimentTable::load(required(
            "sentiment",
            "file",
            arg,
        )?)?)),
        ("process", arg) => Ok(Box::new(ProcessProvider::spawn_command(
            required("sentiment", "process", arg)?,
            process_workers(),
            timeout,
        )?)),
        _ => Err(Failure::input(format!(
            "--sentiment {:?}: expected lexicon, file:PATH or process:COMMAND",
            args.sentiment
        ))),
    }
}

pub fn embedder(spec: &str, timeout: Duration) -> Result<Box<dyn EmbeddingProvider>, Failure> {
    match split_spec(spec) {
        ("hashed", None) => Ok(Box::new(HashedEmbedder::new(DEFAULT_HASHED_DIM))),
        ("hashed", Some(dim)) => match dim.parse::<usize>() {
            Ok(d) if d > 0 => Ok(Box::new(HashedEmbedder::new(d))),
            _ => Err(Failure::input(format!(
                "--embed hashed:{dim}: dimension must be a positive integer"
            ))),
        },
        ("file", arg) => Ok(Box::new(EmbeddingTable::load(required(
            "embed", "file", arg,
        )?)?)),
        ("process", arg) => Ok(Box::new(ProcessProvider::spawn_command(
            required("embed", "process", arg)?,
            process_workers(),
            timeout,
        )?)),
        _ => Err(Failure::input(format!(
            "--embed {spec:?}: expected hashed[:DIM], file:PATH or process:COMMAND"
        ))),
    }
}

pub fn lexicons(args: &ProviderArgs) -> Result<Lexicons, Failure> {
    let load = |path: &Option<std::path::PathBuf>, kind| -> Result<WordList, Failure> {
        match path {
            Some(p) => Ok(load_wordlist(p, kind)?.0),
            None => Ok(WordList::builtin(kind)),
        }
    };
    let aesthetic = load(&args.aw, WordListKind::Aesthetic)?;
    let object = load(&args.ow, WordListKind::Object)?;
    Ok(Lexicons::new(aesthetic, object)?)
}
