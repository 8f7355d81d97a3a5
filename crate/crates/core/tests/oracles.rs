use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use ars_core::ars::{label_corpus, ArsBreakdown, FailureMode, Scorer};
use ars_core::corpus::{read_corpus, Corpus};
use ars_core::dacs::{
    group_candidates, select, select_scored, select_with_scorer, Blacklist, Candidate,
    CandidateInput, DacsConfig, Grouping,
};
use ars_core::error::ProviderError;
use ars_core::providers::{
    Embedding, EmbeddingProvider, LexiconSentiment, ScoreTable, SentimentPair, SentimentTable,
};
use ars_core::stats::{build_tfidf, tfidf_norm, tfidf_score, DocumentTerms, StatsConfig};
use ars_core::{tokenize, Error, FrozenStats, Lexicons, WordList, WordListKind};

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

fn corpus(lines: &[(&str, &[&str])]) -> Corpus {
    let text: String = lines
        .iter()
        .map(|(id, comments)| {
            let comments: Vec<_> = comments
                .iter()
                .enumerate()
                .map(|(j, t)| serde_json::json!({"comment_id": format!("c{j}"), "text": t}))
                .collect();
            serde_json::json!({"image_id": id, "aesthetic_score": null, "comments": comments})
                .to_string()
                + "\n"
        })
        .collect();
    read_corpus(text.as_bytes()).unwrap().0
}

#[test]
fn builtin_word_lists_match_data_files() {
    for (file, kind) in [
        ("aesthetic_words.txt", WordListKind::Aesthetic),
        ("object_words.txt", WordListKind::Object),
    ] {
        let text = std::fs::read_to_string(format!("{DATA}/{file}")).unwrap();
        let mut expected = BTreeSet::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lower = line.to_lowercase();
            let word = lower.trim_matches(|c: char| !c.is_alphanumeric());
            if !word.is_empty() && !word.contains(char::is_whitespace) {
                expected.insert(word.to_string());
            }
        }
        let list = WordList::builtin(kind);
        let got: BTreeSet<String> = list.words().map(str::to_string).collect();
        assert_eq!(got, expected, "{file}");
    }
    let aw = WordList::builtin(WordListKind::Aesthetic);
    let ow = WordList::builtin(WordListKind::Object);
    for w in ["composition", "light", "focus", "b&w"] {
        assert!(aw.contains(w), "{w}");
    }
    for w in ["sky", "water", "tree"] {
        assert!(ow.contains(w), "{w}");
    }
    assert!(!aw.contains("the") && !ow.contains("zzz"));
}

#[test]
fn tfidf_of_toy_sentence_matches_brute_force() {
    let c = corpus(&[
        ("doc1", &["light light tree"]),
        ("doc2", &["sky tree. water sky sky"]),
    ]);
    let model = build_tfidf(&c, &StatsConfig::default()).unwrap();

    // Every (term, document) tau by hand.
    let idf = |df: f64| (3.0f64 / (1.0 + df)).ln() + 1.0;
    let taus = [
        2.0 / 3.0 * idf(1.0), // light, doc1
        1.0 / 3.0 * idf(2.0), // tree, doc1
        1.0 / 5.0 * idf(2.0), // tree, doc2
        3.0 / 5.0 * idf(1.0), // sky, doc2
        1.0 / 5.0 * idf(1.0), // water, doc2
    ];
    let n = taus.len() as f64;
    let m = taus.iter().sum::<f64>() / n;
    let s = (taus.iter().map(|t| (t - m).powi(2)).sum::<f64>() / n).sqrt();
    let lo = taus.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = taus.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!((model.tau_mean - m).abs() < 1e-12);
    assert!((model.tau_scale - s).abs() < 1e-12);
    assert_eq!((model.tau_min, model.tau_max), (lo, hi));

    let b = |x: f64| 1.0 / (1.0 + (-(x - m) / s).exp());
    let norm = |t: f64| (b(t) - b(lo)) / (b(hi) - b(lo));
    let doc1 = DocumentTerms::of_image(c.image("doc1").unwrap());
    let t = tokenize("light tree").unwrap();
    let got = tfidf_score(t.tokens(), &doc1, &model).unwrap();
    assert!((got - (norm(taus[0]) + norm(taus[1]))).abs() < 1e-12);

    // A token at tau_max in its own document contributes exactly 1.
    let doc2 = DocumentTerms::of_image(c.image("doc2").unwrap());
    let top = tokenize("light").unwrap();
    assert_eq!(tfidf_score(top.tokens(), &doc1, &model).unwrap(), 1.0);
    assert_eq!(tfidf_norm(model.tau_max, &model).unwrap(), 1.0);
    let oov = tokenize("zebra unicorn").unwrap();
    assert_eq!(tfidf_score(oov.tokens(), &doc2, &model).unwrap(), 0.0);
}

#[test]
fn all_vanishing_sentence_scores_zero() {
    let c = corpus(&[("a", &["light tree sky"]), ("b", &["bird. bird water"])]);
    let stats = FrozenStats::build(&c, StatsConfig::default()).unwrap();
    assert_eq!(stats.length.min_len, 1);
    let lex = Lexicons::builtin();
    let sentiment = LexiconSentiment::builtin();
    let scorer = Scorer::new(&stats, &lex, &sentiment);
    let t = tokenize("xyzzy").unwrap();
    let doc = DocumentTerms::from_tokens(["xyzzy"]);
    let b = scorer.score_sentence(&t, &doc).unwrap();
    assert_eq!(b, ArsBreakdown::compose(0, 0.0, 0, 0.0, 0.0));
    assert_eq!(b.total, 0.0);
    assert_eq!(ArsBreakdown::compose(2, 0.5, 1, 0.6, 0.9).total, 5.0);
}

#[test]
fn labelling_matches_individual_scores() {
    let c = corpus(&[
        ("a", &["Lovely light on the tree. Great composition"]),
        ("b", &["bird over water"]),
    ]);
    let stats = FrozenStats::build(&c, StatsConfig::default()).unwrap();
    let lex = Lexicons::builtin();
    let sentiment = LexiconSentiment::builtin();
    let scorer = Scorer::new(&stats, &lex, &sentiment);
    let labelling = label_corpus(&c, &scorer, FailureMode::Strict).unwrap();
    assert_eq!(labelling.labels.len(), 3);
    let index = ars_core::stats::DocumentIndex::from_corpus(&c);
    for (l, r) in labelling.labels.iter().zip(c.iter_sentences()) {
        let b = scorer.score_in(r.sentence, r.image_id, &index).unwrap();
        assert_eq!(l.breakdown, b);
        assert_eq!(b.total, b.a as f64 + b.l + b.o as f64 + b.s + b.tfidf);
        assert!(b.total >= 0.0);
    }
    let summary = labelling.summary.as_ref().unwrap();
    let totals: Vec<f64> = labelling.labels.iter().map(|l| l.breakdown.total).collect();
    assert!((summary.mean - totals.iter().sum::<f64>() / 3.0).abs() < 1e-12);
    assert_eq!(summary.histogram.iter().map(|b| b.1).sum::<u64>(), 3);

    let mut frozen = stats.clone();
    labelling.freeze_into(&mut frozen).unwrap();
    assert_eq!(frozen.ars_mean, Some(summary.mean));

    let empty = label_corpus(&Corpus::default(), &scorer, FailureMode::Strict).unwrap();
    assert!(empty.labels.is_empty() && empty.summary.is_none());
}

#[test]
fn strict_and_lenient_provider_failures() {
    let c = corpus(&[
        ("a", &["nice light. sharp focus"]),
        ("b", &["bird over water"]),
    ]);
    let stats = FrozenStats::build(&c, StatsConfig::default()).unwrap();
    let lex = Lexicons::builtin();
    let table = SentimentTable::from_pairs([
        (
            "nice light".to_string(),
            SentimentPair::new(0.9, 0.05).unwrap(),
        ),
        (
            "bird over water".to_string(),
            SentimentPair::new(0.1, 0.1).unwrap(),
        ),
    ])
    .unwrap();
    let scorer = Scorer::new(&stats, &lex, &table);
    let err = label_corpus(&c, &scorer, FailureMode::Strict).unwrap_err();
    match &err {
        Error::Sentence { key, .. } => assert_eq!(key, "a/c0/1 (\"sharp focus\")"),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(err.root(), Error::Provider(ProviderError::Missing(t)) if t == "sharp focus"));
    let lenient = label_corpus(&c, &scorer, FailureMode::Lenient).unwrap();
    assert_eq!((lenient.labels.len(), lenient.skipped), (2, 1));
    assert_eq!(lenient.labels[0].breakdown.s, (0.9 + 0.05) / 2.0);
}

fn cand(index: usize, confidence: f64, v: &[f64], ars: f64) -> Candidate {
    Candidate {
        index,
        text: format!("caption {index}"),
        confidence,
        embedding: Embedding::new(v.to_vec()).unwrap(),
        ars,
    }
}

fn cos(a: &Candidate, b: &Candidate) -> f64 {
    let (x, y) = (a.embedding.values(), b.embedding.values());
    let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
    dot / (a.embedding.norm() * b.embedding.norm())
}

/// Leader grouping as sets of candidate indices, by an all-pairs scan.
fn brute_force_leader(cands: &[Candidate], threshold: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<&Candidate> = cands.iter().collect();
    order.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .unwrap()
            .then(a.index.cmp(&b.index))
    });
    let mut leader_of: HashMap<usize, usize> = HashMap::new();
    let mut leaders: Vec<usize> = Vec::new();
    for (pos, c) in order.iter().enumerate() {
        let home = leaders
            .iter()
            .copied()
            .find(|&l| cos(order[l], c) > threshold);
        match home {
            Some(l) => leader_of.insert(c.index, l),
            None => {
                leaders.push(pos);
                leader_of.insert(c.index, pos)
            }
        };
    }
    leaders
        .iter()
        .map(|&l| {
            order
                .iter()
                .filter(|c| leader_of[&c.index] == l)
                .map(|c| c.index)
                .collect()
        })
        .collect()
}

#[test]
fn five_crafted_candidates_group_like_brute_force() {
    let cands = vec![
        cand(0, 0.9, &[1.0, 0.0, 0.0], 3.0),
        cand(1, 0.8, &[0.8, 0.6, 0.0], 4.0), // cos 0.8 with 0
        cand(2, 0.95, &[0.0, 1.0, 0.0], 2.0),
        cand(3, 0.8, &[0.0, 0.6, 0.8], 5.0), // cos 0.6 with 2: new group
        cand(4, 0.1, &[0.6, 0.8, 0.0], 1.0), // cos 0.6 with 0, 0.8 with 2
    ];
    let got: Vec<Vec<usize>> = group_candidates(&cands, 0.7, Grouping::Leader)
        .unwrap()
        .into_iter()
        .map(|g| g.into_iter().map(|i| cands[i].index).collect())
        .collect();
    assert_eq!(got, brute_force_leader(&cands, 0.7));
    assert_eq!(got, vec![vec![2, 4], vec![0, 1], vec![3]]);
}

fn eight_candidates() -> Vec<Candidate> {
    vec![
        cand(0, 0.50, &[1.0, 0.0, 0.0], 6.0),
        cand(1, 0.90, &[0.9, 0.1, 0.0], 2.0),
        cand(2, 0.70, &[0.0, 1.0, 0.0], 4.5),
        cand(3, 0.70, &[0.1, 0.9, 0.1], 4.5),
        cand(4, 0.30, &[0.0, 0.0, 1.0], 1.0),
        cand(5, 0.20, &[0.0, 0.1, 1.0], 1.5),
        cand(6, 0.60, &[-1.0, 0.0, 0.0], 3.0),
        cand(7, 0.65, &[0.95, 0.05, 0.0], 9.0),
    ]
}

/// Every step of the selector spelled out over the crafted instance.
fn brute_force_select(
    cands: &[Candidate],
    floor: f64,
    score: &dyn Fn(&Candidate) -> f64,
) -> Vec<usize> {
    let groups = brute_force_leader(cands, 0.7);
    let by_index = |i: usize| cands.iter().find(|c| c.index == i).unwrap();
    let mut picks: Vec<(f64, usize, usize)> = Vec::new(); // (score, processing position, index)
    let mut order: Vec<&Candidate> = cands.iter().collect();
    order.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .unwrap()
            .then(a.index.cmp(&b.index))
    });
    let pos = |i: usize| order.iter().position(|c| c.index == i).unwrap();
    for g in groups {
        let mean = g.iter().map(|&i| by_index(i).ars).sum::<f64>() / g.len() as f64;
        if mean < floor {
            continue;
        }
        let best = g
            .iter()
            .copied()
            .max_by(|&a, &b| {
                score(by_index(a))
                    .partial_cmp(&score(by_index(b)))
                    .unwrap()
                    .then(pos(b).cmp(&pos(a)))
            })
            .unwrap();
        picks.push((score(by_index(best)), pos(best), best));
    }
    picks.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    picks.into_iter().map(|p| p.2).collect()
}

#[test]
fn eight_crafted_candidates_select_like_brute_force() {
    let cands = eight_candidates();
    for floor in [0.0, 1.25, 3.0, 4.5, 5.6, 10.0] {
        let got: Vec<usize> = select_scored(&cands, &DacsConfig::new(floor), |c| Ok(c.ars))
            .unwrap()
            .iter()
            .map(|s| s.index)
            .collect();
        assert_eq!(
            got,
            brute_force_select(&cands, floor, &|c| c.ars),
            "floor {floor}"
        );
    }
    // Groups: {1,7,0} mean 5.67, {2,3} mean 4.5, {6}, {4,5} mean 1.25.
    let at_mean: Vec<usize> = select_scored(&cands, &DacsConfig::new(4.5), |c| Ok(c.ars))
        .unwrap()
        .iter()
        .map(|s| s.index)
        .collect();
    assert_eq!(at_mean, vec![7, 2]);
}

struct Table(HashMap<String, Vec<f64>>);

impl EmbeddingProvider for Table {
    fn dim(&self) -> Option<usize> {
        Some(3)
    }
    fn embed(&self, text: &str) -> Result<Embedding, ProviderError> {
        self.0
            .get(text)
            .cloned()
            .ok_or_else(|| ProviderError::Missing(text.into()))
            .and_then(Embedding::new)
    }
}

#[test]
fn file_backed_scorer_matches_brute_force() {
    let cands = eight_candidates();
    let hand: HashMap<usize, f64> = [
        (0, 0.9),
        (1, 0.95),
        (2, 0.1),
        (3, 0.3),
        (4, 0.5),
        (5, 0.5),
        (6, 0.7),
        (7, 0.2),
    ]
    .into_iter()
    .collect();
    let mut file = tempfile::NamedTempFile::new().unwrap();
    for c in &cands {
        writeln!(
            file,
            "{}",
            serde_json::json!({"text": c.text, "score": hand[&c.index]})
        )
        .unwrap();
    }
    let table = ScoreTable::load(file.path()).unwrap();

    let inputs: Vec<CandidateInput> = cands
        .iter()
        .map(|c| CandidateInput {
            text: c.text.clone(),
            confidence: c.confidence,
        })
        .collect();
    let embedder = Table(
        cands
            .iter()
            .map(|c| (c.text.clone(), c.embedding.values().to_vec()))
            .collect(),
    );
    let ars = ScoreTable::from_pairs(cands.iter().map(|c| (c.text.clone(), c.ars)));
    let cfg = DacsConfig::new(1.0);

    let got: Vec<usize> = select_with_scorer(&inputs, &cfg, &embedder, &ars, &table)
        .unwrap()
        .iter()
        .map(|s| s.index)
        .collect();
    assert_eq!(got, brute_force_select(&cands, 1.0, &|c| hand[&c.index]));

    // With ARS as the scorer the two entry points agree.
    let plain = select(&inputs, &cfg, &embedder, &ars).unwrap();
    assert_eq!(
        select_with_scorer(&inputs, &cfg, &embedder, &ars, &ars).unwrap(),
        plain
    );

    // A constant scorer picks each group's first member in processing order.
    let constant = ScoreTable::from_pairs(cands.iter().map(|c| (c.text.clone(), 1.0)));
    let leaders: BTreeSet<usize> = select_with_scorer(&inputs, &cfg, &embedder, &ars, &constant)
        .unwrap()
        .iter()
        .map(|s| s.index)
        .collect();
    let expected: BTreeSet<usize> = brute_force_leader(&cands, 0.7)
        .into_iter()
        .filter(|g| g.iter().map(|&i| cands[i].ars).sum::<f64>() / g.len() as f64 >= 1.0)
        .map(|g| g[0])
        .collect();
    assert_eq!(leaders, expected);

    // Blacklisting removes exact cleaned matches only.
    let cfg = DacsConfig {
        blacklist: Blacklist::from_entries(["CAPTION 7!", "caption"]),
        ..DacsConfig::new(1.0)
    };
    let out = select(&inputs, &cfg, &embedder, &ars).unwrap();
    assert!(out.iter().all(|s| s.index != 7));
    assert!(out.iter().any(|s| s.index == 0));
}
