use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while reading or validating a corpus file.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: image_id must be nonempty")]
    EmptyImageId { line: usize },
    #[error("line {line}: duplicate image_id {image_id:?}")]
    DuplicateImageId { line: usize, image_id: String },
    #[error("line {line}: duplicate comment_id {comment_id:?} in image {image_id:?}")]
    DuplicateCommentId {
        line: usize,
        image_id: String,
        comment_id: String,
    },
    #[error("line {line}: aesthetic_score {score} outside [1, 10]")]
    ScoreOutOfRange { line: usize, score: f64 },
}

/// Errors raised by statistics that are undefined for the given data.
#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("sigmoid scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("sentence lengths are degenerate: {0}")]
    DegenerateLengths(String),
    #[error("tf-idf statistics are degenerate: {0}")]
    DegenerateTfIdf(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("unknown document {0:?}")]
    UnknownDocument(String),
    #[error("stats were frozen from corpus {expected} but the corpus hashes to {actual}")]
    HashMismatch { expected: String, actual: String },
    #[error("ars_mean/ars_scale have not been frozen into these stats")]
    ArsNotFrozen,
}

/// Errors raised by sentiment, embedding, and relevance providers.
#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("no provider record for {0:?}")]
    Missing(String),
    #[error("duplicate provider record for {0:?}")]
    DuplicateKey(String),
    #[error("invalid provider value for {key:?}: {message}")]
    Invalid { key: String, message: String },
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("zero embedding for {0:?}")]
    ZeroVector(String),
    #[error("provider process: {0}")]
    Process(String),
    #[error("provider process did not answer within {0:?}")]
    Timeout(std::time::Duration),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Errors raised by the loss reduction and label joins.
#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("sentence {index}: empty log-probability list")]
    EmptySentence { index: usize },
    #[error("sentence {index}: log-probability {value} is not a finite value <= 0")]
    InvalidLogProb { index: usize, value: f64 },
    #[error("sentence {index}: weight {value} is not finite")]
    InvalidWeight { index: usize, value: f64 },
    #[error("no label for sentence {0}")]
    UnresolvedKey(String),
}

/// Top-level error for the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("{context}: {message}")]
    Input { context: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("sentence {key}: {source}")]
    Sentence {
        key: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn input(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Input {
            context: context.into(),
            message: message.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// The innermost error, looking through sentence context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Sentence { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
