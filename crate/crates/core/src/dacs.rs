//! Diverse aesthetic caption selection.
//!
//! Candidates from an upstream generator are filtered against a blacklist of
//! known bad captions, grouped by embedding similarity, groups whose mean ARS
//! falls below a floor are discarded, and each surviving group contributes its
//! highest-scoring member.
//!
//! Processing order is generator confidence descending, ties by input index.
//! Every tie-break in this module falls back to that order.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ars::Scorer;
use crate::corpus::tokenize_words;
use crate::error::{Error, Result};
use crate::providers::{cosine, Embedding, EmbeddingProvider, ScoreTable};

pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.7;

/// One line of a candidates file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateInput {
    pub text: String,
    pub confidence: f64,
}

/// A candidate with its embedding and ARS filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Position in the original candidate list.
    pub index: usize,
    pub text: String,
    pub confidence: f64,
    pub embedding: Embedding,
    pub ars: f64,
}

pub fn read_candidates<R: BufRead>(r: R) -> Result<Vec<CandidateInput>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let ctx = || format!("candidates line {}", i + 1);
        let line = line.map_err(|e| Error::input(ctx(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let c: CandidateInput = serde_json::from_str(&line).map_err(|e| Error::input(ctx(), e))?;
        if tokenize_words(&c.text).is_empty() {
            return Err(Error::input(
                ctx(),
                "candidate text is empty after cleaning",
            ));
        }
        if !c.confidence.is_finite() {
            return Err(Error::input(ctx(), "confidence is not finite"));
        }
        out.push(c);
    }
    Ok(out)
}

/// Exact-match set of bad captions, compared on cleaned text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Blacklist {
    entries: HashSet<String>,
}

fn cleaned(text: &str) -> String {
    tokenize_words(text).join(" ")
}

impl Blacklist {
    /// One entry per line; `#` lines and blank lines are ignored.
    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(cleaned)
            .filter(|l| !l.is_empty())
            .collect();
        Blacklist { entries }
    }

    pub fn from_entries<I: IntoIterator<Item = S>, S: AsRef<str>>(entries: I) -> Self {
        Blacklist {
            entries: entries.into_iter().map(|e| cleaned(e.as_ref())).collect(),
        }
    }

    pub fn is_bad(&self, text: &str) -> bool {
        !self.entries.is_empty() && self.entries.contains(&cleaned(text))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub trait CandidateText {
    fn text(&self) -> &str;
}

impl CandidateText for CandidateInput {
    fn text(&self) -> &str {
        &self.text
    }
}

impl CandidateText for Candidate {
    fn text(&self) -> &str {
        &self.text
    }
}

/// Drops blacklisted candidates, preserving order.
pub fn filter_bad<T: CandidateText + Clone>(cands: &[T], blacklist: &Blacklist) -> Vec<T> {
    cands
        .iter()
        .filter(|c| !blacklist.is_bad(c.text()))
        .cloned()
        .collect()
}

/// How candidates are grouped by similarity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grouping {
    /// Each candidate joins the first group whose leader it exceeds the
    /// threshold with, else leads a new group.
    #[default]
    Leader,
    /// Connected components of the graph with an edge wherever similarity
    /// exceeds the threshold.
    Components,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DacsConfig {
    pub similarity_threshold: f64,
    pub ars_floor: f64,
    pub blacklist: Blacklist,
    pub max_outputs: Option<usize>,
    pub grouping: Grouping,
}

impl DacsConfig {
    /// Default threshold, empty blacklist, no output cap, leader grouping.
    pub fn new(ars_floor: f64) -> Self {
        DacsConfig {
            similarity_threshold: DEFAULT_SIMILARITY_THRESHOLD,
            ars_floor,
            blacklist: Blacklist::default(),
            max_outputs: None,
            grouping: Grouping::Leader,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.similarity_threshold > 0.0 && self.similarity_threshold <= 1.0) {
            return Err(Error::input(
                "dacs",
                format!(
                    "similarity threshold {} outside (0, 1]",
                    self.similarity_threshold
                ),
            ));
        }
        if !self.ars_floor.is_finite() {
            return Err(Error::input("dacs", "ars floor is not finite"));
        }
        Ok(())
    }
}

fn by_processing_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then(a.index.cmp(&b.index))
}

/// Positions into `cands`, sorted into processing order.
pub fn processing_order(cands: &[Candidate]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| by_processing_order(&cands[a], &cands[b]));
    order
}

/// Groups of positions into `cands`. Members of each group are in processing
/// order and the first member is the group's leader; groups are ordered by
/// their leader.
pub fn group_candidates(
    cands: &[Candidate],
    threshold: f64,
    grouping: Grouping,
) -> Result<Vec<Vec<usize>>> {
    let order = processing_order(cands);
    match grouping {
        Grouping::Leader => {
            let mut groups: Vec<Vec<usize>> = Vec::new();
            for &i in &order {
                let mut home = None;
                for (g, members) in groups.iter().enumerate() {
                    if cosine(&cands[members[0]].embedding, &cands[i].embedding)? > threshold {
                        home = Some(g);
                        break;
                    }
                }
                match home {
                    Some(g) => groups[g].push(i),
                    None => groups.push(vec![i]),
                }
            }
            Ok(groups)
        }
        Grouping::Components => {
            let n = cands.len();
            let mut parent: Vec<usize> = (0..n).collect();
            fn find(p: &mut [usize], mut x: usize) -> usize {
                while p[x] != x {
                    p[x] = p[p[x]];
                    x = p[x];
                }
                x
            }
            for i in 0..n {
                for j in i + 1..n {
                    if cosine(&cands[i].embedding, &cands[j].embedding)? > threshold {
                        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                        if ri != rj {
                            parent[ri] = rj;
                        }
                    }
                }
            }
            let mut groups: Vec<Vec<usize>> = Vec::new();
            let mut slot_of_root = vec![usize::MAX; n];
            for &i in &order {
                let r = find(&mut parent, i);
                if slot_of_root[r] == usize::MAX {
                    slot_of_root[r] = groups.len();
                    groups.push(Vec::new());
                }
                groups[slot_of_root[r]].push(i);
            }
            Ok(groups)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGroup {
    /// Positions into the candidate slice, in processing order.
    pub members: Vec<usize>,
    pub mean_ars: f64,
    /// Position of the member with the highest representative score.
    pub representative: usize,
    pub representative_score: f64,
}

/// A selected caption.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub text: String,
    pub confidence: f64,
    pub ars: f64,
    /// The value the representative was picked by (ARS unless a different
    /// scorer was supplied).
    pub score: f64,
    pub group_size: usize,
    /// 1-based output position.
    pub rank: usize,
}

/// One line of a selection output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub text: String,
    pub ars: f64,
    pub group_size: usize,
    pub rank: usize,
}

impl From<&Selection> for SelectionRecord {
    fn from(s: &Selection) -> Self {
        SelectionRecord {
            text: s.text.clone(),
            ars: s.ars,
            group_size: s.group_size,
            rank: s.rank,
        }
    }
}

pub fn write_selections<W: Write>(sel: &[Selection], mut w: W) -> std::io::Result<()> {
    for s in sel {
        serde_json::to_writer(&mut w, &SelectionRecord::from(s))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Runs filtering, grouping, the floor and the per-group pick over candidates
/// whose embeddings and ARS are already known. `rep_score` supplies the value
/// each group's representative is chosen by and outputs are ordered by.
///
/// Raising `ars_floor` never adds outputs when `max_outputs` is `None`.
pub fn select_scored<F>(
    cands: &[Candidate],
    config: &DacsConfig,
    rep_score: F,
) -> Result<Vec<Selection>>
where
    F: Fn(&Candidate) -> Result<f64>,
{
    config.validate()?;
    let kept = filter_bad(cands, &config.blacklist);
    let groups = group_candidates(&kept, config.similarity_threshold, config.grouping)?;

    let mut survivors = Vec::new();
    for members in groups {
        let mean_ars = members.iter().map(|&i| kept[i].ars).sum::<f64>() / members.len() as f64;
        if mean_ars < config.ars_floor {
            continue;
        }
        let mut representative = members[0];
        let mut best = rep_score(&kept[representative])?;
        for &i in &members[1..] {
            let v = rep_score(&kept[i])?;
            if v > best {
                best = v;
                representative = i;
            }
        }
        survivors.push(CandidateGroup {
            members,
            mean_ars,
            representative,
            representative_score: best,
        });
    }

    survivors.sort_by(|a, b| {
        b.representative_score
            .total_cmp(&a.representative_score)
            .then_with(|| by_processing_order(&kept[a.representative], &kept[b.representative]))
    });
    if let Some(k) = config.max_outputs {
        survivors.truncate(k);
    }
    Ok(survivors
        .iter()
        .enumerate()
        .map(|(r, g)| {
            let c = &kept[g.representative];
            Selection {
                index: c.index,
                text: c.text.clone(),
                confidence: c.confidence,
                ars: c.ars,
                score: g.representative_score,
                group_size: g.members.len(),
                rank: r + 1,
            }
        })
        .collect())
}

/// Maps caption text to a relevance value used to pick group representatives.
pub trait RelevanceScorer: Sync {
    fn score(&self, text: &str) -> Result<f64>;
}

impl RelevanceScorer for Scorer<'_> {
    fn score(&self, text: &str) -> Result<f64> {
        Ok(self.score_text(text)?.total)
    }
}

impl RelevanceScorer for ScoreTable {
    fn score(&self, text: &str) -> Result<f64> {
        Ok(self.get(text)?)
    }
}

/// Embeds and scores the non-blacklisted candidates.
pub fn prepare_candidates(
    inputs: &[CandidateInput],
    blacklist: &Blacklist,
    embedder: &dyn EmbeddingProvider,
    ars: &dyn RelevanceScorer,
) -> Result<Vec<Candidate>> {
    let kept: Vec<(usize, &CandidateInput)> = inputs
        .iter()
        .enumerate()
        .filter(|(_, c)| !blacklist.is_bad(&c.text))
        .collect();
    kept.par_iter()
        .map(|&(index, c)| {
            let embedding = embedder.embed(&c.text)?;
            let ars = ars.score(&c.text)?;
            Ok(Candidate {
                index,
                text: c.text.clone(),
                confidence: c.confidence,
                embedding,
                ars,
            })
        })
        .collect()
}

/// The full selector with ARS picking each group's representative.
pub fn select(
    inputs: &[CandidateInput],
    config: &DacsConfig,
    embedder: &dyn EmbeddingProvider,
    ars: &dyn RelevanceScorer,
) -> Result<Vec<Selection>> {
    let cands = prepare_candidates(inputs, &config.blacklist, embedder, ars)?;
    select_scored(&cands, config, |c| Ok(c.ars))
}

/// The selector with `scorer` picking each group's representative. Groups are
/// still filtered by mean ARS.
pub fn select_with_scorer(
    inputs: &[CandidateInput],
    config: &DacsConfig,
    embedder: &dyn EmbeddingProvider,
    ars: &dyn RelevanceScorer,
    scorer: &dyn RelevanceScorer,
) -> Result<Vec<Selection>> {
    let cands = prepare_candidates(inputs, &config.blacklist, embedder, ars)?;
    select_scored(&cands, config, |c| scorer.score(&c.text))
}
