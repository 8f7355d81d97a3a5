//! Sentiment pairs and sentence embeddings behind one interface.
//!
//! Three kinds of backend exist for each: tables read from JSONL files,
//! deterministic built-in fallbacks, and an external process speaking a
//! line-delimited JSON protocol. Providers are keyed by the raw sentence text
//! (before tokenization).
//!
//! Process protocol: on start the process writes a handshake line
//! `{"proto":1,"dim":<int|null>}`. Each request is one line,
//! `{"op":"sentiment"|"embed","text":"..."}`, answered by exactly one line,
//! `{"positive":p,"negative":n}` or `{"vector":[...]}`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Mutex, OnceLock};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::tokenize_words;
use crate::error::ProviderError;
use crate::lexicon::{WordList, WordListKind};

type Result<T> = std::result::Result<T, ProviderError>;

/// Predicted positive and negative sentiment, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentPair {
    pub positive: f64,
    pub negative: f64,
}

impl SentimentPair {
    pub fn new(positive: f64, negative: f64) -> Result<Self> {
        let pair = SentimentPair { positive, negative };
        pair.check("")?;
        Ok(pair)
    }

    fn check(&self, key: &str) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if unit(self.positive) && unit(self.negative) {
            Ok(())
        } else {
            Err(ProviderError::Invalid {
                key: key.to_string(),
                message: format!(
                    "sentiment ({}, {}) outside [0, 1]",
                    self.positive, self.negative
                ),
            })
        }
    }
}

/// `S(t) = (P_s + N_s) / 2`
pub fn sentiment_score(pair: SentimentPair) -> f64 {
    (pair.positive + pair.negative) / 2.0
}

/// A non-zero, finite sentence feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
    norm: f64,
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::checked(values, "")
    }

    fn checked(values: Vec<f64>, key: &str) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(ProviderError::Invalid {
                key: key.to_string(),
                message: "embedding must be a nonempty vector of finite numbers".into(),
            });
        }
        // Also catches vectors whose norm underflows or overflows.
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(ProviderError::ZeroVector(key.to_string()));
        }
        Ok(Embedding { values, norm })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(ProviderError::DimMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok((dot / (a.norm() * b.norm())).clamp(-1.0, 1.0))
}

pub trait SentimentProvider: Send + Sync {
    fn sentiment(&self, text: &str) -> Result<SentimentPair>;
}

pub trait EmbeddingProvider: Send + Sync {
    /// Vector length, when known before the first request.
    fn dim(&self) -> Option<usize>;
    fn embed(&self, text: &str) -> Result<Embedding>;
}

fn read_table<R, K, V>(path: &Path, mut convert: K) -> Result<HashMap<String, V>>
where
    R: DeserializeOwned,
    K: FnMut(R) -> Result<(String, V)>,
{
    let file = File::open(path).map_err(|source| ProviderError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut table = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let malformed = |message: String| ProviderError::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let line = line.map_err(|e| malformed(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: R = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let (key, value) = convert(rec).map_err(|e| malformed(e.to_string()))?;
        if table.contains_key(&key) {
            return Err(ProviderError::DuplicateKey(key));
        }
        table.insert(key, value);
    }
    Ok(table)
}

#[derive(Deserialize)]
struct SentimentRow {
    text: String,
    positive: f64,
    negative: f64,
}

/// Sentiment pairs looked up by exact raw sentence text.
#[derive(Debug, Clone, Default)]
pub struct SentimentTable {
    rows: HashMap<String, SentimentPair>,
}

impl SentimentTable {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let rows = read_table(path.as_ref(), |r: SentimentRow| {
            let pair = SentimentPair {
                positive: r.positive,
                negative: r.negative,
            };
            pair.check(&r.text)?;
            Ok((r.text, pair))
        })?;
        Ok(SentimentTable { rows })
    }

    pub fn from_pairs<I: IntoIterator<Item = (String, SentimentPair)>>(pairs: I) -> Result<Self> {
        let mut rows = HashMap::new();
        for (k, v) in pairs {
            v.check(&k)?;
            if rows.insert(k.clone(), v).is_some() {
                return Err(ProviderError::DuplicateKey(k));
            }
        }
        Ok(SentimentTable { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

impl SentimentProvider for SentimentTable {
    fn sentiment(&self, text: &str) -> Result<SentimentPair> {
        self.rows
            .get(text)
            .copied()
            .ok_or_else(|| ProviderError::Missing(text.to_string()))
    }
}

const POSITIVE_WORDS: &str = include_str!("../data/sentiment_positive.txt");
const NEGATIVE_WORDS: &str = include_str!("../data/sentiment_negative.txt");

/// Word-count sentiment: with `p` positive and `n` negative hits the pair is
/// `(p / (p + n + 1), n / (p + n + 1))`.
///
/// This is a self-contained stand-in, not a reproduction of a trained
/// sentiment model; feed real model output through a table or process.
#[derive(Debug, Clone)]
pub struct LexiconSentiment {
    positive: WordList,
    negative: WordList,
}

impl LexiconSentiment {
    pub fn new(positive: WordList, negative: WordList) -> Self {
        LexiconSentiment { positive, negative }
    }

    pub fn builtin() -> Self {
        // The kind tag is irrelevant for these lists.
        LexiconSentiment {
            positive: WordList::parse_quiet(POSITIVE_WORDS, WordListKind::Aesthetic).0,
            negative: WordList::parse_quiet(NEGATIVE_WORDS, WordListKind::Aesthetic).0,
        }
    }
}

impl SentimentProvider for LexiconSentiment {
    fn sentiment(&self, text: &str) -> Result<SentimentPair> {
        let tokens = tokenize_words(text);
        let p = self.positive.count(&tokens) as f64;
        let n = self.negative.count(&tokens) as f64;
        let d = p + n + 1.0;
        Ok(SentimentPair {
            positive: p / d,
            negative: n / d,
        })
    }
}

#[derive(Deserialize)]
struct EmbeddingRow {
    text: String,
    vector: Vec<f64>,
}

/// Stored vectors looked up by exact raw sentence text.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    rows: HashMap<String, Embedding>,
    dim: usize,
}

impl EmbeddingTable {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut dim = None;
        let rows = read_table(path.as_ref(), |r: EmbeddingRow| {
            let e = Embedding::checked(r.vector, &r.text)?;
            match dim {
                None => dim = Some(e.dim()),
                Some(d) if d != e.dim() => {
                    return Err(ProviderError::DimMismatch {
                        expected: d,
                        actual: e.dim(),
                    })
                }
                _ => {}
            }
            Ok((r.text, e))
        })?;
        let dim = dim.ok_or_else(|| ProviderError::Malformed {
            path: path.as_ref().to_path_buf(),
            line: 0,
            message: "embedding table is empty".into(),
        })?;
        Ok(EmbeddingTable { rows, dim })
    }
}

impl EmbeddingProvider for EmbeddingTable {
    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn embed(&self, text: &str) -> Result<Embedding> {
        self.rows
            .get(text)
            .cloned()
            .ok_or_else(|| ProviderError::Missing(text.to_string()))
    }
}

pub const DEFAULT_HASHED_DIM: usize = 256;

/// L2-normalized bag of tokens hashed into a fixed number of buckets.
#[derive(Debug, Clone, Copy)]
pub struct HashedEmbedder {
    dim: usize,
}

impl HashedEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashedEmbedder { dim }
    }
}

impl Default for HashedEmbedder {
    fn default() -> Self {
        HashedEmbedder::new(DEFAULT_HASHED_DIM)
    }
}

// 64-bit FNV-1a; stable across platforms and releases.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

impl EmbeddingProvider for HashedEmbedder {
    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn embed(&self, text: &str) -> Result<Embedding> {
        let mut v = vec![0.0; self.dim];
        for tok in tokenize_words(text) {
            v[(fnv1a(tok.as_bytes()) % self.dim as u64) as usize] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(ProviderError::ZeroVector(text.to_string()));
        }
        v.iter_mut().for_each(|x| *x /= norm);
        Embedding::checked(v, text)
    }
}

pub const DEFAULT_PROCESS_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Serialize)]
struct Request<'a> {
    op: &'a str,
    text: &'a str,
}

#[derive(Deserialize)]
struct Handshake {
    proto: u32,
    dim: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SentimentReply {
    positive: f64,
    negative: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VectorReply {
    vector: Vec<f64>,
}

struct Worker {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    broken: bool,
}

impl Worker {
    fn spawn(program: &str, args: &[String], timeout: Duration) -> Result<(Worker, Handshake)> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| ProviderError::Io {
                path: PathBuf::from(program),
                source,
            })?;
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let mut worker = Worker {
            stdin: child.stdin.take(),
            child,
            lines: rx,
            broken: false,
        };
        let line = worker.read_line(timeout)?;
        let hs: Handshake = serde_json::from_str(&line)
            .map_err(|e| ProviderError::Process(format!("bad handshake {line:?}: {e}")))?;
        if hs.proto != 1 {
            return Err(ProviderError::Process(format!(
                "unsupported protocol version {}",
                hs.proto
            )));
        }
        Ok((worker, hs))
    }

    fn read_line(&mut self, timeout: Duration) -> Result<String> {
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => {
                self.broken = true;
                Err(ProviderError::Process(format!("reading reply: {e}")))
            }
            Err(RecvTimeoutError::Timeout) => {
                self.broken = true;
                Err(ProviderError::Timeout(timeout))
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.broken = true;
                Err(ProviderError::Process("process closed its output".into()))
            }
        }
    }

    fn request(&mut self, op: &str, text: &str, timeout: Duration) -> Result<String> {
        if self.broken {
            return Err(ProviderError::Process(
                "worker is out of sync after an earlier failure".into(),
            ));
        }
        let mut line = serde_json::to_string(&Request { op, text }).expect("request serialize");
        line.push('\n');
        let stdin = self.stdin.as_mut().expect("stdin open while worker alive");
        if let Err(e) = stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()) {
            self.broken = true;
            return Err(ProviderError::Process(format!("writing request: {e}")));
        }
        self.read_line(timeout)
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        drop(self.stdin.take());
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A pool of external processes speaking the line protocol. Each worker has
/// one request in flight at a time.
pub struct ProcessProvider {
    workers: Vec<Mutex<Worker>>,
    next: AtomicUsize,
    declared_dim: Option<usize>,
    session_dim: OnceLock<usize>,
    timeout: Duration,
}

impl std::fmt::Debug for ProcessProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProcessProvider")
            .field("workers", &self.workers.len())
            .field("dim", &self.declared_dim)
            .finish()
    }
}

impl ProcessProvider {
    /// Starts `workers` copies of `program args...` and reads their handshakes.
    pub fn spawn(
        program: &str,
        args: &[String],
        workers: usize,
        timeout: Duration,
    ) -> Result<Self> {
        let mut pool = Vec::with_capacity(workers.max(1));
        let mut declared_dim = None;
        for i in 0..workers.max(1) {
            let (w, hs) = Worker::spawn(program, args, timeout)?;
            if i > 0 && hs.dim != declared_dim {
                return Err(ProviderError::Process(format!(
                    "workers disagree on dim: {:?} vs {:?}",
                    declared_dim, hs.dim
                )));
            }
            declared_dim = hs.dim;
            pool.push(Mutex::new(w));
        }
        Ok(ProcessProvider {
            workers: pool,
            next: AtomicUsize::new(0),
            declared_dim,
            session_dim: OnceLock::new(),
            timeout,
        })
    }

    /// Parses a whitespace-separated command line.
    pub fn spawn_command(command: &str, workers: usize, timeout: Duration) -> Result<Self> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| ProviderError::Process("empty provider command".into()))?;
        let args: Vec<String> = parts.collect();
        Self::spawn(&program, &args, workers, timeout)
    }

    fn call(&self, op: &str, text: &str) -> Result<String> {
        let i = self.next.fetch_add(1, Ordering::Relaxed) % self.workers.len();
        let mut w = self.workers[i]
            .lock()
            .map_err(|_| ProviderError::Process("worker lock poisoned".into()))?;
        w.request(op, text, self.timeout)
    }
}

impl SentimentProvider for ProcessProvider {
    fn sentiment(&self, text: &str) -> Result<SentimentPair> {
        let line = self.call("sentiment", text)?;
        let r: SentimentReply = serde_json::from_str(&line).map_err(|e| {
            ProviderError::Process(format!("non-conforming sentiment reply {line:?}: {e}"))
        })?;
        let pair = SentimentPair {
            positive: r.positive,
            negative: r.negative,
        };
        pair.check(text)?;
        Ok(pair)
    }
}

impl EmbeddingProvider for ProcessProvider {
    fn dim(&self) -> Option<usize> {
        self.declared_dim
            .or_else(|| self.session_dim.get().copied())
    }

    fn embed(&self, text: &str) -> Result<Embedding> {
        let line = self.call("embed", text)?;
        let r: VectorReply = serde_json::from_str(&line).map_err(|e| {
            ProviderError::Process(format!("non-conforming embed reply {line:?}: {e}"))
        })?;
        let e = Embedding::checked(r.vector, text)?;
        let expected = match self.declared_dim {
            Some(d) => d,
            None => *self.session_dim.get_or_init(|| e.dim()),
        };
        if e.dim() != expected {
            return Err(ProviderError::DimMismatch {
                expected,
                actual: e.dim(),
            });
        }
        Ok(e)
    }
}

#[derive(Deserialize)]
struct ScoreRow {
    text: String,
    score: f64,
}

/// Externally supplied relevance scores, JSONL `{"text": str, "score": num}`.
#[derive(Debug, Clone, Default)]
pub struct ScoreTable {
    rows: HashMap<String, f64>,
}

impl ScoreTable {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let rows = read_table(path.as_ref(), |r: ScoreRow| {
            if !r.score.is_finite() {
                return Err(ProviderError::Invalid {
                    key: r.text,
                    message: "score is not finite".into(),
                });
            }
            Ok((r.text, r.score))
        })?;
        Ok(ScoreTable { rows })
    }

    pub fn from_pairs<I: IntoIterator<Item = (String, f64)>>(pairs: I) -> Self {
        ScoreTable {
            rows: pairs.into_iter().collect(),
        }
    }

    pub fn get(&self, text: &str) -> Result<f64> {
        self.rows
            .get(text)
            .copied()
            .ok_or_else(|| ProviderError::Missing(text.to_string()))
    }
}
