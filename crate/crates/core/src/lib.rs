//! Aesthetic relevance scoring of image comments.
//!
//! The engine labels every sentence of an image-comment corpus with its
//! aesthetic relevance score (ARS), the unweighted sum of five parts:
//!
//! * `A(t)`: occurrences of aesthetic words ([`lexicon`]),
//! * `L(t)`: a logistic length score ([`stats`]),
//! * `O(t)`: occurrences of object words ([`lexicon`]),
//! * `S(t)`: mean of predicted positive and negative sentiment ([`providers`]),
//! * `T_fidf(t)`: a sum of logistically normalized tf-idf values ([`stats`]).
//!
//! Scores then weight a captioning cross-entropy ([`loss`]) and drive the
//! diverse caption selector ([`dacs`]).

pub mod ars;
pub mod corpus;
pub mod dacs;
pub mod error;
pub mod lexicon;
pub mod loss;
pub mod manifest;
pub mod numeric;
pub mod providers;
pub mod stats;

pub use ars::{
    label_corpus, partition_by_threshold, ArsBreakdown, FailureMode, LabelRecord, LabelledSentence,
    Scorer, SentenceKey, ThresholdPartition, ThresholdRule,
};
pub use corpus::{load_corpus, tokenize, Corpus, Sentence};
pub use dacs::{Candidate, CandidateInput, DacsConfig, Grouping, Selection};
pub use error::{Error, Result};
pub use lexicon::{Lexicons, WordList, WordListKind};
pub use loss::{weighted_ce, BatchLoss, SentenceLossInput};
pub use manifest::RunManifest;
pub use providers::{Embedding, EmbeddingProvider, SentimentPair, SentimentProvider};
pub use stats::{FrozenStats, LengthStats, StatsConfig, TfIdfModel};
