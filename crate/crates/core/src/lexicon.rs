//! Aesthetic and object word lists, and the membership counts `A(t)` / `O(t)`.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize_words, Sentence};
use crate::error::{Error, Result};

const AESTHETIC_WORDS: &str = include_str!("../data/aesthetic_words.txt");
const OBJECT_WORDS: &str = include_str!("../data/object_words.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WordListKind {
    Aesthetic,
    Object,
}

impl WordListKind {
    /// Size of the published list.
    pub fn expected_size(self) -> usize {
        match self {
            WordListKind::Aesthetic => 1022,
            WordListKind::Object => 2146,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordList {
    kind: WordListKind,
    words: BTreeSet<String>,
}

/// What happened while normalizing a word-list file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordListReport {
    pub entries: usize,
    pub duplicates: usize,
    /// Entries that normalized to nothing, or to more than one token.
    pub dropped: Vec<String>,
}

impl WordList {
    /// Parses one entry per line. `#` lines and blank lines are ignored.
    /// Entries go through the corpus tokenizer so that they compare equal to
    /// tokens.
    pub fn parse(text: &str, kind: WordListKind) -> (WordList, WordListReport) {
        let (list, report) = Self::parse_quiet(text, kind);
        list.warn_on(&report);
        (list, report)
    }

    pub(crate) fn parse_quiet(text: &str, kind: WordListKind) -> (WordList, WordListReport) {
        let mut report = WordListReport::default();
        let mut words = BTreeSet::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            report.entries += 1;
            let mut toks = tokenize_words(line);
            if toks.len() != 1 {
                report.dropped.push(line.to_string());
                continue;
            }
            if !words.insert(toks.pop().unwrap()) {
                report.duplicates += 1;
            }
        }
        (WordList { kind, words }, report)
    }

    fn warn_on(&self, report: &WordListReport) {
        if self.words.is_empty() {
            log::warn!("{:?} word list is empty", self.kind);
        } else if self.words.len() != self.kind.expected_size() {
            log::warn!(
                "{:?} word list has {} words, expected {}",
                self.kind,
                self.words.len(),
                self.kind.expected_size()
            );
        }
        if report.duplicates > 0 {
            log::warn!(
                "{:?} word list: {} duplicate entries",
                self.kind,
                report.duplicates
            );
        }
        for d in &report.dropped {
            log::warn!("{:?} word list: dropped entry {d:?}", self.kind);
        }
    }

    /// The transcribed list shipped with the crate. Spelling variants such as
    /// `dof` / `dof.` collapse under tokenization, so it holds slightly fewer
    /// words than published; no warning is logged for that.
    pub fn builtin(kind: WordListKind) -> WordList {
        let text = match kind {
            WordListKind::Aesthetic => AESTHETIC_WORDS,
            WordListKind::Object => OBJECT_WORDS,
        };
        WordList::parse_quiet(text, kind).0
    }

    pub fn kind(&self) -> WordListKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// Number of token occurrences that are in the list.
    pub fn count(&self, tokens: &[String]) -> usize {
        tokens.iter().filter(|t| self.contains(t)).count()
    }
}

pub fn load_wordlist(
    path: impl AsRef<Path>,
    kind: WordListKind,
) -> Result<(WordList, WordListReport)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(WordList::parse(&text, kind))
}

/// `A(t)`: occurrences of aesthetic words in `t`. Repeats count repeatedly.
pub fn aesthetic_count(t: &Sentence, aw: &WordList) -> usize {
    debug_assert_eq!(aw.kind, WordListKind::Aesthetic);
    aw.count(t.tokens())
}

/// `O(t)`: occurrences of object words in `t`.
pub fn object_count(t: &Sentence, ow: &WordList) -> usize {
    debug_assert_eq!(ow.kind, WordListKind::Object);
    ow.count(t.tokens())
}

/// The pair of lists used by the scorer.
#[derive(Debug, Clone)]
pub struct Lexicons {
    pub aesthetic: WordList,
    pub object: WordList,
}

impl Lexicons {
    pub fn new(aesthetic: WordList, object: WordList) -> Result<Self> {
        if aesthetic.kind != WordListKind::Aesthetic || object.kind != WordListKind::Object {
            return Err(Error::input("lexicons", "word list kinds are swapped"));
        }
        Ok(Lexicons { aesthetic, object })
    }

    pub fn builtin() -> Self {
        Lexicons {
            aesthetic: WordList::builtin(WordListKind::Aesthetic),
            object: WordList::builtin(WordListKind::Object),
        }
    }
}
