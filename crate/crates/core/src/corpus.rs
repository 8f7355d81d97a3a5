//! Image-comment corpus: ingestion, canonical tokenization and iteration.
//!
//! Every formula downstream works on [`Sentence::tokens`], so the tokenizer
//! here is the single definition of a "word". Tokens are produced by
//! lowercasing the text, splitting on whitespace and stripping leading and
//! trailing non-alphanumeric characters; tokens that end up empty are dropped.
//! Comments are split into sentences on `.`, `!` and `?`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CorpusError;

/// A cleaned sentence `t` with its tokens `t_w`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    raw_text: String,
    tokens: Vec<String>,
}

impl Sentence {
    pub fn raw_text(&self) -> &str {
        &self.raw_text
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Number of tokens, `|t|`. Always at least one.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Tokens joined by single spaces.
    pub fn cleaned_text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Tokenizes `raw_text`. Returns `None` when no token survives cleaning.
pub fn tokenize(raw_text: &str) -> Option<Sentence> {
    let tokens = tokenize_words(raw_text);
    if tokens.is_empty() {
        return None;
    }
    Some(Sentence {
        raw_text: raw_text.to_string(),
        tokens,
    })
}

/// The token list of `text` under the canonical rule, possibly empty.
pub fn tokenize_words(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// Splits comment text on sentence terminators, trimming each fragment and
/// discarding empty ones.
pub fn split_sentences(comment_text: &str) -> Vec<&str> {
    comment_text
        .split(['.', '!', '?'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comment {
    pub comment_id: String,
    pub sentences: Vec<Sentence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub image_id: String,
    pub comments: Vec<Comment>,
    pub aesthetic_score: Option<f64>,
}

impl ImageRecord {
    /// All tokens of all comments, in order. This is the tf-idf document.
    pub fn document_tokens(&self) -> impl Iterator<Item = &str> {
        self.comments
            .iter()
            .flat_map(|c| c.sentences.iter())
            .flat_map(|s| s.tokens.iter().map(String::as_str))
    }
}

/// Counters collected while ingesting a corpus file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub images: usize,
    pub comments: usize,
    pub sentences: usize,
    pub dropped_sentences: usize,
    pub dropped_comments: usize,
}

/// An immutable, validated corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    images: Vec<ImageRecord>,
}

/// One sentence located within its corpus.
#[derive(Debug, Clone, Copy)]
pub struct SentenceRef<'a> {
    pub image_id: &'a str,
    pub comment_id: &'a str,
    pub sentence_index: usize,
    pub sentence: &'a Sentence,
}

#[derive(Debug, Serialize, Deserialize)]
struct ImageLine {
    image_id: String,
    #[serde(default)]
    aesthetic_score: Option<f64>,
    comments: Vec<CommentLine>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CommentLine {
    comment_id: String,
    text: String,
}

impl Corpus {
    /// Builds a corpus from already-validated records.
    ///
    /// Panics if the image ids are not unique or a score is out of range; use
    /// [`read_corpus`] for untrusted input.
    pub fn from_images(images: Vec<ImageRecord>) -> Self {
        let mut seen = HashSet::new();
        for img in &images {
            assert!(!img.image_id.is_empty(), "empty image_id");
            assert!(
                seen.insert(img.image_id.as_str()),
                "duplicate image_id {}",
                img.image_id
            );
            if let Some(s) = img.aesthetic_score {
                assert!(
                    (1.0..=10.0).contains(&s),
                    "aesthetic_score {s} out of range"
                );
            }
        }
        Corpus { images }
    }

    pub fn images(&self) -> &[ImageRecord] {
        &self.images
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image(&self, image_id: &str) -> Option<&ImageRecord> {
        self.images.iter().find(|i| i.image_id == image_id)
    }

    /// Every sentence in document order: image, then comment, then position.
    pub fn iter_sentences(&self) -> impl Iterator<Item = SentenceRef<'_>> {
        self.images.iter().flat_map(|img| {
            img.comments.iter().flat_map(move |c| {
                c.sentences
                    .iter()
                    .enumerate()
                    .map(move |(i, s)| SentenceRef {
                        image_id: &img.image_id,
                        comment_id: &c.comment_id,
                        sentence_index: i,
                        sentence: s,
                    })
            })
        })
    }

    pub fn sentence_count(&self) -> usize {
        self.images
            .iter()
            .flat_map(|i| &i.comments)
            .map(|c| c.sentences.len())
            .sum()
    }

    /// Writes the normalized corpus as JSONL. Each comment's text is its
    /// surviving sentences joined by `". "`, so reloading reproduces the corpus.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for img in &self.images {
            let line = ImageLine {
                image_id: img.image_id.clone(),
                aesthetic_score: img.aesthetic_score,
                comments: img
                    .comments
                    .iter()
                    .map(|c| CommentLine {
                        comment_id: c.comment_id.clone(),
                        text: c
                            .sentences
                            .iter()
                            .map(|s| s.raw_text.as_str())
                            .collect::<Vec<_>>()
                            .join(". "),
                    })
                    .collect(),
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// SHA-256 of the normalized JSONL form, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)
            .expect("writing to a Vec cannot fail");
        hex::encode(Sha256::digest(&buf))
    }
}

/// Parses a corpus from JSONL. Blank lines are skipped.
pub fn read_corpus<R: Read>(reader: R) -> Result<(Corpus, IngestReport), CorpusError> {
    let mut report = IngestReport::default();
    let mut images = Vec::new();
    let mut ids = HashSet::new();

    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ImageLine = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: lineno,
            message: e.to_string(),
        })?;
        if rec.image_id.is_empty() {
            return Err(CorpusError::EmptyImageId { line: lineno });
        }
        if let Some(score) = rec.aesthetic_score {
            if !(1.0..=10.0).contains(&score) {
                return Err(CorpusError::ScoreOutOfRange {
                    line: lineno,
                    score,
                });
            }
        }
        if !ids.insert(rec.image_id.clone()) {
            return Err(CorpusError::DuplicateImageId {
                line: lineno,
                image_id: rec.image_id,
            });
        }

        let mut comment_ids = HashSet::new();
        let mut comments = Vec::with_capacity(rec.comments.len());
        for c in rec.comments {
            if !comment_ids.insert(c.comment_id.clone()) {
                return Err(CorpusError::DuplicateCommentId {
                    line: lineno,
                    image_id: rec.image_id,
                    comment_id: c.comment_id,
                });
            }
            let mut sentences = Vec::new();
            for raw in split_sentences(&c.text) {
                match tokenize(raw) {
                    Some(s) => sentences.push(s),
                    None => report.dropped_sentences += 1,
                }
            }
            if sentences.is_empty() {
                report.dropped_comments += 1;
                continue;
            }
            report.sentences += sentences.len();
            comments.push(Comment {
                comment_id: c.comment_id,
                sentences,
            });
        }
        report.comments += comments.len();
        images.push(ImageRecord {
            image_id: rec.image_id,
            comments,
            aesthetic_score: rec.aesthetic_score,
        });
    }
    report.images = images.len();
    Ok((Corpus { images }, report))
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    load_corpus_with_report(path).map(|(c, _)| c)
}

pub fn load_corpus_with_report(
    path: impl AsRef<Path>,
) -> Result<(Corpus, IngestReport), CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_corpus(file)
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    corpus.write_jsonl(&mut w)?;
    w.flush()
}
