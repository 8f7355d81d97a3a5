//! Aesthetic relevance score of a sentence, corpus labelling, threshold
//! partitions and the score histogram.
//!
//! `ARS(t) = A(t) + L(t) + O(t) + S(t) + T_fidf(t)`, summed without weights.

use std::fmt;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Corpus, Sentence, SentenceRef};
use crate::error::{Error, Result};
use crate::lexicon::{aesthetic_count, object_count, Lexicons};
use crate::numeric::Moments;
use crate::providers::{sentiment_score, SentimentProvider};
use crate::stats::{length_score, tfidf_score, DocumentIndex, DocumentTerms, FrozenStats};

/// Bin width of the histogram in a [`LabelSummary`].
pub const SUMMARY_BIN_WIDTH: f64 = 1.0;

/// The five components of a sentence's score and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArsBreakdown {
    pub a: usize,
    pub l: f64,
    pub o: usize,
    pub s: f64,
    pub tfidf: f64,
    pub total: f64,
}

impl ArsBreakdown {
    pub fn compose(a: usize, l: f64, o: usize, s: f64, tfidf: f64) -> Self {
        ArsBreakdown {
            a,
            l,
            o,
            s,
            tfidf,
            total: a as f64 + l + o as f64 + s + tfidf,
        }
    }
}

/// Scores sentences against frozen statistics, word lists and a sentiment
/// provider.
#[derive(Clone, Copy)]
pub struct Scorer<'a> {
    pub stats: &'a FrozenStats,
    pub lexicons: &'a Lexicons,
    pub sentiment: &'a dyn SentimentProvider,
}

impl<'a> Scorer<'a> {
    pub fn new(
        stats: &'a FrozenStats,
        lexicons: &'a Lexicons,
        sentiment: &'a dyn SentimentProvider,
    ) -> Self {
        Scorer {
            stats,
            lexicons,
            sentiment,
        }
    }

    /// Scores `t` with tf-idf terms taken from `doc`, the document `t` belongs to.
    pub fn score_sentence(&self, t: &Sentence, doc: &DocumentTerms) -> Result<ArsBreakdown> {
        let a = aesthetic_count(t, &self.lexicons.aesthetic);
        let l = length_score(t.len(), &self.stats.length);
        let o = object_count(t, &self.lexicons.object);
        let s = sentiment_score(self.sentiment.sentiment(t.raw_text())?);
        let tfidf = tfidf_score(t.tokens(), doc, &self.stats.tfidf)?;
        Ok(ArsBreakdown::compose(a, l, o, s, tfidf))
    }

    /// Scores a corpus sentence, looking its document up by image id.
    pub fn score_in(
        &self,
        t: &Sentence,
        doc_id: &str,
        index: &DocumentIndex,
    ) -> Result<ArsBreakdown> {
        let doc = index.get(doc_id)?;
        self.score_sentence(t, doc)
    }

    /// Scores free text that belongs to no corpus document, such as a
    /// generated caption. The sentence serves as its own document.
    pub fn score_text(&self, raw: &str) -> Result<ArsBreakdown> {
        let t = tokenize(raw)
            .ok_or_else(|| Error::input("sentence", format!("{raw:?} has no tokens")))?;
        let doc = DocumentTerms::from_tokens(t.tokens().iter().map(String::as_str));
        self.score_sentence(&t, &doc)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SentenceKey {
    pub image_id: String,
    pub comment_id: String,
    pub sentence_index: usize,
}

impl fmt::Display for SentenceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}",
            self.image_id, self.comment_id, self.sentence_index
        )
    }
}

impl From<&SentenceRef<'_>> for SentenceKey {
    fn from(r: &SentenceRef<'_>) -> Self {
        SentenceKey {
            image_id: r.image_id.to_string(),
            comment_id: r.comment_id.to_string(),
            sentence_index: r.sentence_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelledSentence {
    pub key: SentenceKey,
    pub sentence: Sentence,
    pub breakdown: ArsBreakdown,
}

/// One line of a labels file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub image_id: String,
    pub comment_id: String,
    pub sentence_index: usize,
    pub text: String,
    pub a: usize,
    pub l: f64,
    pub o: usize,
    pub s: f64,
    pub tfidf: f64,
    pub ars: f64,
}

impl LabelRecord {
    pub fn key(&self) -> SentenceKey {
        SentenceKey {
            image_id: self.image_id.clone(),
            comment_id: self.comment_id.clone(),
            sentence_index: self.sentence_index,
        }
    }
}

impl From<&LabelledSentence> for LabelRecord {
    fn from(l: &LabelledSentence) -> Self {
        let b = &l.breakdown;
        LabelRecord {
            image_id: l.key.image_id.clone(),
            comment_id: l.key.comment_id.clone(),
            sentence_index: l.key.sentence_index,
            text: l.sentence.raw_text().to_string(),
            a: b.a,
            l: b.l,
            o: b.o,
            s: b.s,
            tfidf: b.tfidf,
            ars: b.total,
        }
    }
}

pub fn write_labels<W: Write>(labels: &[LabelRecord], mut w: W) -> std::io::Result<()> {
    for l in labels {
        serde_json::to_writer(&mut w, l)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_labels<R: BufRead>(r: R) -> Result<Vec<LabelRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let ctx = || format!("labels line {}", i + 1);
        let line = line.map_err(|e| Error::input(ctx(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::input(ctx(), e))?);
    }
    Ok(out)
}

/// How provider failures are handled while labelling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FailureMode {
    /// The first failing sentence (in document order) aborts labelling.
    #[default]
    Strict,
    /// Failing sentences are skipped and counted.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub bin_width: f64,
    pub histogram: Vec<(f64, u64)>,
}

impl LabelSummary {
    pub fn of(totals: &[f64]) -> Option<LabelSummary> {
        let m = Moments::of(totals.to_vec())?;
        Some(LabelSummary {
            count: m.count,
            mean: m.mean,
            std: m.std_dev(),
            min: m.min,
            max: m.max,
            bin_width: SUMMARY_BIN_WIDTH,
            histogram: ars_histogram(totals, SUMMARY_BIN_WIDTH),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Labelling {
    pub labels: Vec<LabelledSentence>,
    pub skipped: usize,
    /// `None` when nothing was labelled.
    pub summary: Option<LabelSummary>,
}

impl Labelling {
    pub fn records(&self) -> Vec<LabelRecord> {
        self.labels.iter().map(LabelRecord::from).collect()
    }

    /// Stores the label mean and population standard deviation as
    /// `ars_mean` / `ars_scale`.
    pub fn freeze_into(&self, stats: &mut FrozenStats) -> Result<()> {
        let s = self.summary.as_ref().ok_or_else(|| {
            Error::input("labels", "cannot freeze ARS moments of an empty labelling")
        })?;
        stats.ars_mean = Some(s.mean);
        stats.ars_scale = Some(s.std);
        Ok(())
    }
}

/// Labels every sentence of `corpus` in document order.
pub fn label_corpus(corpus: &Corpus, scorer: &Scorer<'_>, mode: FailureMode) -> Result<Labelling> {
    let index = DocumentIndex::from_corpus(corpus);
    let refs: Vec<SentenceRef<'_>> = corpus.iter_sentences().collect();
    let scored: Vec<Result<ArsBreakdown>> = refs
        .par_iter()
        .map(|r| scorer.score_in(r.sentence, r.image_id, &index))
        .collect();

    let mut labels = Vec::with_capacity(refs.len());
    let mut skipped = 0;
    for (r, res) in refs.iter().zip(scored) {
        let key = SentenceKey::from(r);
        match res {
            Ok(breakdown) => labels.push(LabelledSentence {
                key,
                sentence: r.sentence.clone(),
                breakdown,
            }),
            Err(e) => match mode {
                FailureMode::Strict => {
                    return Err(Error::Sentence {
                        key: format!("{key} ({:?})", r.sentence.raw_text()),
                        source: Box::new(e),
                    })
                }
                FailureMode::Lenient => {
                    log::warn!("skipping {key}: {e}");
                    skipped += 1;
                }
            },
        }
    }
    let totals: Vec<f64> = labels.iter().map(|l| l.breakdown.total).collect();
    Ok(Labelling {
        summary: LabelSummary::of(&totals),
        labels,
        skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdRule {
    /// `ARS <= m - alpha * sigma`
    Leq,
    /// `ARS >= m + alpha * sigma`
    Geq,
}

impl std::str::FromStr for ThresholdRule {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "leq" => Ok(ThresholdRule::Leq),
            "geq" => Ok(ThresholdRule::Geq),
            other => Err(format!("unknown rule {other:?}; expected leq or geq")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionMember {
    #[serde(flatten)]
    pub key: SentenceKey,
    pub ars: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPartition {
    pub rule: ThresholdRule,
    pub alpha: f64,
    pub mean: f64,
    pub scale: f64,
    pub threshold: f64,
    /// Sorted by ARS descending, then by input order.
    pub members: Vec<PartitionMember>,
}

/// Selects labels on one side of `mean -/+ alpha * scale`.
pub fn partition_by_threshold(
    labels: &[LabelRecord],
    mean: f64,
    scale: f64,
    alpha: f64,
    rule: ThresholdRule,
) -> ThresholdPartition {
    let threshold = match rule {
        ThresholdRule::Leq => mean - alpha * scale,
        ThresholdRule::Geq => mean + alpha * scale,
    };
    let mut members: Vec<PartitionMember> = labels
        .iter()
        .filter(|l| match rule {
            ThresholdRule::Leq => l.ars <= threshold,
            ThresholdRule::Geq => l.ars >= threshold,
        })
        .map(|l| PartitionMember {
            key: l.key(),
            ars: l.ars,
        })
        .collect();
    // Stable sort keeps input order among ties.
    members.sort_by(|a, b| b.ars.total_cmp(&a.ars));
    ThresholdPartition {
        rule,
        alpha,
        mean,
        scale,
        threshold,
        members,
    }
}

/// Left-closed bins `[k * width, (k + 1) * width)` from 0 up to the bin of the
/// largest value, including empty bins in between.
pub fn ars_histogram(values: &[f64], bin_width: f64) -> Vec<(f64, u64)> {
    assert!(bin_width > 0.0, "bin width must be positive");
    let mut counts: Vec<u64> = Vec::new();
    for &v in values {
        let bin = (v.max(0.0) / bin_width).floor() as usize;
        if bin >= counts.len() {
            counts.resize(bin + 1, 0);
        }
        counts[bin] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (k as f64 * bin_width, c))
        .collect()
}
