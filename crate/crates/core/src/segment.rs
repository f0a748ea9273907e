//! Splitting documents into passages, words and character n-grams.
//!
//! Everything here is driven by configurable delimiter sets rather than
//! language rules, and all comparisons are case-sensitive.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_NGRAM_N: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Paragraph,
    Sentence,
    Line,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Paragraph => "paragraph",
            Granularity::Sentence => "sentence",
            Granularity::Line => "line",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("word delimiter set is empty")]
    NoWordDelimiters,
    #[error("sentence delimiter set is empty")]
    NoSentenceDelimiters,
    #[error("n-gram size must be at least 1")]
    ZeroNgram,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationConfig {
    word_delimiters: BTreeSet<char>,
    sentence_delimiters: BTreeSet<char>,
    ngram_n: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            word_delimiters: [' ', '\t', '\n'].into_iter().collect(),
            sentence_delimiters: ['.', '!', '?'].into_iter().collect(),
            ngram_n: DEFAULT_NGRAM_N,
        }
    }
}

impl SegmentationConfig {
    pub fn new(
        word_delimiters: impl IntoIterator<Item = char>,
        sentence_delimiters: impl IntoIterator<Item = char>,
        ngram_n: usize,
    ) -> Result<Self, ConfigError> {
        let word_delimiters: BTreeSet<char> = word_delimiters.into_iter().collect();
        let sentence_delimiters: BTreeSet<char> = sentence_delimiters.into_iter().collect();
        if word_delimiters.is_empty() {
            return Err(ConfigError::NoWordDelimiters);
        }
        if sentence_delimiters.is_empty() {
            return Err(ConfigError::NoSentenceDelimiters);
        }
        if ngram_n == 0 {
            return Err(ConfigError::ZeroNgram);
        }
        Ok(SegmentationConfig {
            word_delimiters,
            sentence_delimiters,
            ngram_n,
        })
    }

    pub fn with_ngram_n(self, ngram_n: usize) -> Result<Self, ConfigError> {
        Self::new(self.word_delimiters, self.sentence_delimiters, ngram_n)
    }

    pub fn word_delimiters(&self) -> &BTreeSet<char> {
        &self.word_delimiters
    }

    pub fn sentence_delimiters(&self) -> &BTreeSet<char> {
        &self.sentence_delimiters
    }

    pub fn ngram_n(&self) -> usize {
        self.ngram_n
    }

    fn is_word_delim(&self, c: char) -> bool {
        self.word_delimiters.contains(&c)
    }

    fn is_sentence_delim(&self, c: char) -> bool {
        self.sentence_delimiters.contains(&c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub text: String,
    /// Position within its snapshot.
    pub ordinal: usize,
    pub granularity: Granularity,
}

impl Passage {
    /// Length in characters.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

fn number(texts: Vec<&str>, granularity: Granularity) -> Vec<Passage> {
    texts
        .into_iter()
        .enumerate()
        .map(|(ordinal, text)| Passage {
            text: text.to_owned(),
            ordinal,
            granularity,
        })
        .collect()
}

fn paragraph_texts(content: &str) -> impl Iterator<Item = &str> {
    content.split('\n').filter(|p| !p.trim().is_empty())
}

/// Paragraphs are runs of text separated by one or more newlines.
/// Whitespace-only runs are dropped.
pub fn split_paragraphs(content: &str) -> Vec<Passage> {
    number(paragraph_texts(content).collect(), Granularity::Paragraph)
}

/// Sentences end at any sentence delimiter; a run of delimiters ("?!")
/// stays with the sentence it closes. Sentences never span a paragraph
/// break. Surrounding whitespace is trimmed.
pub fn split_sentences(content: &str, cfg: &SegmentationConfig) -> Vec<Passage> {
    let mut out = Vec::new();
    for para in paragraph_texts(content) {
        let mut start = 0;
        let mut chars = para.char_indices().peekable();
        while let Some((_, c)) = chars.next() {
            if !cfg.is_sentence_delim(c) {
                continue;
            }
            while let Some(&(_, next)) = chars.peek() {
                if !cfg.is_sentence_delim(next) {
                    break;
                }
                chars.next();
            }
            let end = chars.peek().map_or(para.len(), |&(i, _)| i);
            out.push(&para[start..end]);
            start = end;
        }
        out.push(&para[start..]);
    }
    let texts = out
        .into_iter()
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    number(texts, Granularity::Sentence)
}

/// Every line, blank ones included. Empty content is a single empty line.
pub fn split_lines(content: &str) -> Vec<Passage> {
    number(content.split('\n').collect(), Granularity::Line)
}

pub fn split(content: &str, granularity: Granularity, cfg: &SegmentationConfig) -> Vec<Passage> {
    match granularity {
        Granularity::Paragraph => split_paragraphs(content),
        Granularity::Sentence => split_sentences(content, cfg),
        Granularity::Line => split_lines(content),
    }
}

/// Maximal runs of non-delimiter characters.
pub fn tokenize_words<'a>(content: &'a str, cfg: &SegmentationConfig) -> Vec<&'a str> {
    content
        .split(|c| cfg.is_word_delim(c))
        .filter(|w| !w.is_empty())
        .collect()
}

/// Overlapping character windows of length `n`. Text shorter than `n`
/// yields itself as the only gram.
pub fn char_ngrams(text: &str, n: usize) -> Vec<&str> {
    assert!(n >= 1, "n-gram size must be at least 1");
    let bounds: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let chars = bounds.len() - 1;
    if chars < n {
        return vec![text];
    }
    (0..=chars - n)
        .map(|i| &text[bounds[i]..bounds[i + n]])
        .collect()
}
