//! Corpus statistics behind the length score `L(t)` and the normalized
//! tf-idf sum `T_fidf(t)`, frozen once per training corpus.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, ImageRecord};
use crate::error::{Error, Result, StatsError};
use crate::numeric::Moments;

/// Logistic curve `1 / (1 + exp(-(x - m) / sigma))`.
pub fn sigmoid(x: f64, m: f64, sigma: f64) -> Result<f64, StatsError> {
    if !(sigma > 0.0) {
        return Err(StatsError::NonPositiveScale(sigma));
    }
    Ok(logistic(x, m, sigma))
}

#[inline]
fn logistic(x: f64, m: f64, sigma: f64) -> f64 {
    1.0 / (1.0 + (-(x - m) / sigma).exp())
}

/// Min-max rescaling of `x` through the logistic curve, with `x` clamped to
/// `[lo, hi]`. Exactly 0 at `lo` and exactly 1 at `hi`.
fn rescaled_logistic(x: f64, m: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    let x = x.clamp(lo, hi);
    let b_lo = logistic(lo, m, sigma);
    let b_hi = logistic(hi, m, sigma);
    (logistic(x, m, sigma) - b_lo) / (b_hi - b_lo)
}

/// How the spread statistic of a sample is turned into the sigmoid scale.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleKind {
    #[default]
    StdDev,
    Variance,
}

impl ScaleKind {
    fn pick(self, m: &Moments) -> f64 {
        match self {
            ScaleKind::StdDev => m.std_dev(),
            ScaleKind::Variance => m.variance,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    #[serde(rename = "e")]
    E,
    #[serde(rename = "10")]
    Ten,
    #[serde(rename = "2")]
    Two,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::E => x.ln(),
            LogBase::Ten => x.log10(),
            LogBase::Two => x.log2(),
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "e" => Ok(LogBase::E),
            "10" => Ok(LogBase::Ten),
            "2" => Ok(LogBase::Two),
            other => Err(format!("unknown log base {other:?}; expected e, 10 or 2")),
        }
    }
}

/// Which population the tau mean/scale/min/max are taken over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauPopulation {
    /// One value per distinct (term, document) pair.
    #[default]
    Pairs,
    /// One value per token occurrence.
    Occurrences,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsConfig {
    pub scale: ScaleKind,
    pub log_base: LogBase,
    pub tau_population: TauPopulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub mean: f64,
    pub scale: f64,
    pub min_len: usize,
    pub max_len: usize,
}

impl LengthStats {
    pub fn from_lengths<I>(lengths: I, scale: ScaleKind) -> Result<LengthStats, StatsError>
    where
        I: IntoIterator<Item = usize>,
    {
        let values: Vec<f64> = lengths.into_iter().map(|l| l as f64).collect();
        if values.len() < 2 {
            return Err(StatsError::DegenerateLengths(format!(
                "need at least 2 sentences, got {}",
                values.len()
            )));
        }
        let m = Moments::of(values).expect("nonempty");
        let s = scale.pick(&m);
        if m.min == m.max || !(s > 0.0) {
            return Err(StatsError::DegenerateLengths(format!(
                "all {} sentences have length {}",
                m.count, m.min
            )));
        }
        Ok(LengthStats {
            mean: m.mean,
            scale: s,
            min_len: m.min as usize,
            max_len: m.max as usize,
        })
    }

    fn validate(&self) -> Result<(), StatsError> {
        if self.min_len >= self.max_len || !(self.scale > 0.0) || !self.mean.is_finite() {
            return Err(StatsError::DegenerateLengths(format!("{self:?}")));
        }
        Ok(())
    }
}

pub fn compute_length_stats(corpus: &Corpus, scale: ScaleKind) -> Result<LengthStats, StatsError> {
    LengthStats::from_lengths(corpus.iter_sentences().map(|r| r.sentence.len()), scale)
}

/// `L(t)` for a sentence of `len` tokens. Lengths outside the observed range
/// are clamped.
pub fn length_score(len: usize, ls: &LengthStats) -> f64 {
    rescaled_logistic(
        len as f64,
        ls.mean,
        ls.scale,
        ls.min_len as f64,
        ls.max_len as f64,
    )
}

/// Term counts of one document (all comments of one image).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DocumentTerms {
    counts: HashMap<String, u64>,
    total: u64,
}

impl DocumentTerms {
    pub fn from_tokens<'a, I: IntoIterator<Item = &'a str>>(tokens: I) -> Self {
        let mut counts = HashMap::new();
        let mut total = 0;
        for t in tokens {
            *counts.entry(t.to_string()).or_insert(0) += 1;
            total += 1;
        }
        DocumentTerms { counts, total }
    }

    pub fn of_image(image: &ImageRecord) -> Self {
        Self::from_tokens(image.document_tokens())
    }

    /// `n_tm`
    pub fn count(&self, term: &str) -> u64 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    /// `N_tm`
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Per-image documents of a corpus, looked up by image id.
#[derive(Debug, Clone, Default)]
pub struct DocumentIndex {
    docs: HashMap<String, DocumentTerms>,
}

impl DocumentIndex {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let docs = corpus
            .images()
            .par_iter()
            .map(|img| (img.image_id.clone(), DocumentTerms::of_image(img)))
            .collect();
        DocumentIndex { docs }
    }

    pub fn get(&self, doc_id: &str) -> Result<&DocumentTerms, StatsError> {
        self.docs
            .get(doc_id)
            .ok_or_else(|| StatsError::UnknownDocument(doc_id.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    /// `N`
    pub doc_count: u64,
    /// `I_tm` per term
    pub doc_freq: BTreeMap<String, u64>,
    pub log_base: LogBase,
    pub tau_population: TauPopulation,
    pub tau_mean: f64,
    pub tau_scale: f64,
    pub tau_min: f64,
    pub tau_max: f64,
}

impl TfIdfModel {
    /// `log((1 + N) / (1 + I_tm)) + 1`, or `None` for a term not in the model.
    pub fn idf_factor(&self, term: &str) -> Option<f64> {
        self.doc_freq
            .get(term)
            .map(|&df| idf(self.log_base, self.doc_count, df))
    }

    /// `tau(term, doc)`; zero for a term absent from the model or the document.
    pub fn tau(&self, term: &str, doc: &DocumentTerms) -> f64 {
        match self.idf_factor(term) {
            Some(f) if doc.total() > 0 => doc.count(term) as f64 / doc.total() as f64 * f,
            _ => 0.0,
        }
    }

    fn validate(&self) -> Result<(), StatsError> {
        let ok = self.tau_min < self.tau_max
            && self.tau_scale > 0.0
            && self.tau_min <= self.tau_mean
            && self.tau_mean <= self.tau_max;
        if !ok {
            return Err(StatsError::DegenerateTfIdf(format!(
                "tau range [{}, {}], mean {}, scale {}",
                self.tau_min, self.tau_max, self.tau_mean, self.tau_scale
            )));
        }
        if let Some((t, df)) = self
            .doc_freq
            .iter()
            .find(|(_, &df)| df == 0 || df > self.doc_count)
        {
            return Err(StatsError::DegenerateTfIdf(format!(
                "term {t:?} has document frequency {df} with {} documents",
                self.doc_count
            )));
        }
        Ok(())
    }
}

fn idf(base: LogBase, n: u64, df: u64) -> f64 {
    base.log((1.0 + n as f64) / (1.0 + df as f64)) + 1.0
}

/// Builds document frequencies and the tau distribution of a corpus.
pub fn build_tfidf(corpus: &Corpus, config: &StatsConfig) -> Result<TfIdfModel, StatsError> {
    if corpus.is_empty() {
        return Err(StatsError::EmptyCorpus);
    }
    let docs: Vec<DocumentTerms> = corpus
        .images()
        .par_iter()
        .map(DocumentTerms::of_image)
        .collect();

    let mut doc_freq: BTreeMap<String, u64> = BTreeMap::new();
    for d in &docs {
        for (term, _) in d.terms() {
            *doc_freq.entry(term.to_string()).or_insert(0) += 1;
        }
    }
    let n = docs.len() as u64;

    let taus: Vec<f64> = docs
        .par_iter()
        .flat_map_iter(|d| {
            let doc_freq = &doc_freq;
            d.terms().flat_map(move |(term, count)| {
                let tau = count as f64 / d.total() as f64 * idf(config.log_base, n, doc_freq[term]);
                let reps = match config.tau_population {
                    TauPopulation::Pairs => 1,
                    TauPopulation::Occurrences => count as usize,
                };
                std::iter::repeat_n(tau, reps)
            })
        })
        .collect();

    let m = Moments::of(taus)
        .ok_or_else(|| StatsError::DegenerateTfIdf("corpus has no tokens".to_string()))?;
    let model = TfIdfModel {
        doc_count: n,
        doc_freq,
        log_base: config.log_base,
        tau_population: config.tau_population,
        tau_mean: m.mean,
        tau_scale: config.scale.pick(&m),
        tau_min: m.min,
        tau_max: m.max,
    };
    model.validate()?;
    Ok(model)
}

/// `tau_n`: tau rescaled into `[0, 1]` through the fitted logistic curve.
pub fn tfidf_norm(tau: f64, model: &TfIdfModel) -> Result<f64, StatsError> {
    if !(model.tau_min < model.tau_max) || !(model.tau_scale > 0.0) {
        return Err(StatsError::DegenerateTfIdf(format!(
            "tau range [{}, {}]",
            model.tau_min, model.tau_max
        )));
    }
    Ok(rescaled_logistic(
        tau,
        model.tau_mean,
        model.tau_scale,
        model.tau_min,
        model.tau_max,
    ))
}

/// `T_fidf(t)`: sum of `tau_n` over every token of the sentence, with tau
/// taken in `doc`.
pub fn tfidf_score(
    tokens: &[String],
    doc: &DocumentTerms,
    model: &TfIdfModel,
) -> Result<f64, StatsError> {
    tokens
        .iter()
        .map(|t| tfidf_norm(model.tau(t, doc), model))
        .sum()
}

/// Everything frozen from a training corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenStats {
    pub corpus_hash: String,
    pub config: StatsConfig,
    pub length: LengthStats,
    pub tfidf: TfIdfModel,
    /// Mean ARS of the training sentences, once labelled.
    pub ars_mean: Option<f64>,
    pub ars_scale: Option<f64>,
}

impl FrozenStats {
    pub fn build(corpus: &Corpus, config: StatsConfig) -> Result<FrozenStats, StatsError> {
        let length = compute_length_stats(corpus, config.scale)?;
        let tfidf = build_tfidf(corpus, &config)?;
        Ok(FrozenStats {
            corpus_hash: corpus.content_hash(),
            config,
            length,
            tfidf,
            ars_mean: None,
            ars_scale: None,
        })
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        self.length.validate()?;
        self.tfidf.validate()
    }

    /// Rejects stats frozen from a different corpus unless `force` is set.
    pub fn check_corpus(&self, corpus: &Corpus, force: bool) -> Result<(), StatsError> {
        let actual = corpus.content_hash();
        if actual != self.corpus_hash {
            if force {
                log::warn!(
                    "stats corpus hash {} differs from {actual}; continuing",
                    self.corpus_hash
                );
            } else {
                return Err(StatsError::HashMismatch {
                    expected: self.corpus_hash.clone(),
                    actual,
                });
            }
        }
        Ok(())
    }

    /// `(m_ARS, sigma_ARS)`
    pub fn ars_moments(&self) -> Result<(f64, f64), StatsError> {
        match (self.ars_mean, self.ars_scale) {
            (Some(m), Some(s)) => Ok((m, s)),
            _ => Err(StatsError::ArsNotFrozen),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("stats serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<FrozenStats> {
        let stats: FrozenStats =
            serde_json::from_str(text).map_err(|e| Error::input("stats", e))?;
        stats.validate()?;
        Ok(stats)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<FrozenStats> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        FrozenStats::from_json(&text).map_err(|e| match e {
            Error::Input { message, .. } => Error::input(path.display().to_string(), message),
            other => other,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}
