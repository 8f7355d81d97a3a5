//! Synthetic inputs shared by the benchmarks.

use ars_core::corpus::read_corpus;
use ars_core::Corpus;

const WORDS: &[&str] = &[
    "the",
    "light",
    "shot",
    "sky",
    "composition",
    "lovely",
    "tree",
    "focus",
    "is",
    "a",
    "bit",
    "soft",
    "water",
    "great",
    "background",
    "distracting",
    "colors",
    "sharp",
    "bird",
    "nice",
];

/// A corpus of `images` images with three comments of two sentences each.
/// Word choice is a fixed linear-congruential walk, so the corpus is the same
/// on every run.
pub fn synthetic_corpus(images: usize) -> Corpus {
    let mut state: u64 = 0x2545f4914f6cdd1d;
    let mut next = |n: usize| {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 33) as usize) % n
    };
    let mut text = String::new();
    for i in 0..images {
        let comments: Vec<String> = (0..3)
            .map(|c| {
                let sentence = |next: &mut dyn FnMut(usize) -> usize| {
                    let len = 3 + next(15);
                    (0..len)
                        .map(|_| WORDS[next(WORDS.len())])
                        .collect::<Vec<_>>()
                        .join(" ")
                };
                let a = sentence(&mut next);
                let b = sentence(&mut next);
                format!("{{\"comment_id\":\"c{c}\",\"text\":\"{a}. {b}!\"}}")
            })
            .collect();
        text.push_str(&format!(
            "{{\"image_id\":\"img-{i}\",\"aesthetic_score\":null,\"comments\":[{}]}}\n",
            comments.join(",")
        ));
    }
    read_corpus(text.as_bytes())
        .expect("synthetic corpus is valid")
        .0
}
