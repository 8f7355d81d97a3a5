//! ARS-weighted cross-entropy over externally supplied token log-probabilities.
//!
//! `L = -sum_k w_k * sum_i log p_k,i`, with `w_k` the ARS of training sentence
//! `k`. No normalization by batch size or token count is applied.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::ars::{LabelRecord, SentenceKey};
use crate::error::{Error, LossError, Result};
use crate::numeric::neumaier_sum;

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceLossInput {
    pub weight: f64,
    /// `log p(y_i = y_i*)` for each token of the ground-truth sentence.
    pub token_log_probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchLoss {
    pub total: f64,
    pub per_sentence: Vec<f64>,
    pub sentence_count: usize,
}

fn validate(batch: &[SentenceLossInput]) -> Result<(), LossError> {
    if batch.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    for (index, s) in batch.iter().enumerate() {
        if s.token_log_probs.is_empty() {
            return Err(LossError::EmptySentence { index });
        }
        if !s.weight.is_finite() {
            return Err(LossError::InvalidWeight {
                index,
                value: s.weight,
            });
        }
        if let Some(&value) = s
            .token_log_probs
            .iter()
            .find(|v| !(v.is_finite() && **v <= 0.0))
        {
            return Err(LossError::InvalidLogProb { index, value });
        }
    }
    Ok(())
}

fn log_likelihood(s: &SentenceLossInput) -> f64 {
    neumaier_sum(s.token_log_probs.iter().copied())
}

/// The weighted loss of a batch.
pub fn weighted_ce(batch: &[SentenceLossInput]) -> Result<BatchLoss, LossError> {
    validate(batch)?;
    let per_sentence: Vec<f64> = batch
        .iter()
        .map(|s| {
            if s.weight == 0.0 {
                0.0
            } else {
                -(s.weight * log_likelihood(s))
            }
        })
        .collect();
    Ok(BatchLoss {
        total: neumaier_sum(per_sentence.iter().copied()),
        sentence_count: batch.len(),
        per_sentence,
    })
}

/// The same batch with every weight ignored (plain cross-entropy).
pub fn unweighted_ce(batch: &[SentenceLossInput]) -> Result<f64, LossError> {
    validate(batch)?;
    Ok(neumaier_sum(batch.iter().map(|s| -log_likelihood(s))))
}

/// One line of a log-probability file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogProbRecord {
    pub image_id: String,
    pub comment_id: String,
    pub sentence_index: usize,
    pub log_probs: Vec<f64>,
}

impl LogProbRecord {
    pub fn key(&self) -> SentenceKey {
        SentenceKey {
            image_id: self.image_id.clone(),
            comment_id: self.comment_id.clone(),
            sentence_index: self.sentence_index,
        }
    }
}

pub fn read_log_probs<R: BufRead>(r: R) -> Result<Vec<LogProbRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let ctx = || format!("log-prob line {}", i + 1);
        let line = line.map_err(|e| Error::input(ctx(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::input(ctx(), e))?);
    }
    Ok(out)
}

/// Joins log-probability rows to their labels by sentence key, in row order.
pub fn attach_weights(
    labels: &[LabelRecord],
    rows: &[LogProbRecord],
) -> Result<Vec<SentenceLossInput>, LossError> {
    let by_key: HashMap<SentenceKey, f64> = labels.iter().map(|l| (l.key(), l.ars)).collect();
    rows.iter()
        .map(|r| {
            let key = r.key();
            let weight = *by_key
                .get(&key)
                .ok_or_else(|| LossError::UnresolvedKey(key.to_string()))?;
            Ok(SentenceLossInput {
                weight,
                token_log_probs: r.log_probs.clone(),
            })
        })
        .collect()
}

/// One line of a weights file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    /// `[image_id, comment_id, sentence_index]`
    pub key: (String, String, usize),
    pub weight: f64,
}

pub fn write_weights<W: Write>(
    rows: &[LogProbRecord],
    inputs: &[SentenceLossInput],
    mut w: W,
) -> std::io::Result<()> {
    for (r, s) in rows.iter().zip(inputs) {
        let rec = WeightRecord {
            key: (r.image_id.clone(), r.comment_id.clone(), r.sentence_index),
            weight: s.weight,
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
