//! Passage similarity as the cosine of relative n-gram frequency vectors.

use std::cmp::Ordering;
use std::ops::Range;

use thiserror::Error;

use crate::segment::char_ngrams;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("cannot profile an empty passage")]
pub struct EmptyPassage;

/// Relative frequency of each distinct character n-gram in a passage.
///
/// Grams are kept sorted so that every accumulation over a profile happens
/// in the same order regardless of how it was built. They are stored as
/// byte ranges into one copy of the passage.
#[derive(Debug, Clone)]
pub struct NGramProfile {
    text: Box<str>,
    entries: Vec<(Range<usize>, f64)>,
    gram_count: usize,
    norm_sq: f64,
}

impl NGramProfile {
    pub fn build(text: &str, n: usize) -> Result<Self, EmptyPassage> {
        if text.is_empty() {
            return Err(EmptyPassage);
        }
        let base = text.as_ptr() as usize;
        let mut grams = char_ngrams(text, n);
        let total = grams.len() as f64;
        grams.sort_unstable();
        // Equal grams are now adjacent; each run becomes one weight.
        let entries: Vec<(Range<usize>, f64)> = grams
            .chunk_by(|a, b| a == b)
            .map(|run| {
                let start = run[0].as_ptr() as usize - base;
                (start..start + run[0].len(), run.len() as f64 / total)
            })
            .collect();
        let norm_sq = entries.iter().map(|(_, x)| x * x).sum();
        Ok(NGramProfile {
            text: text.into(),
            entries,
            gram_count: grams.len(),
            norm_sq,
        })
    }

    /// Grams and their weights in sorted gram order.
    pub fn weights(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.entries
            .iter()
            .map(|(r, w)| (&self.text[r.clone()], *w))
    }

    /// Total gram occurrences, including repeats.
    pub fn gram_count(&self) -> usize {
        self.gram_count
    }

    pub fn distinct(&self) -> usize {
        self.entries.len()
    }

    pub fn weight(&self, gram: &str) -> f64 {
        self.entries
            .binary_search_by(|(r, _)| self.text[r.clone()].cmp(gram))
            .map_or(0.0, |i| self.entries[i].1)
    }
}

impl PartialEq for NGramProfile {
    fn eq(&self, other: &Self) -> bool {
        self.gram_count == other.gram_count && self.weights().eq(other.weights())
    }
}

pub fn build_profile(text: &str, n: usize) -> Result<NGramProfile, EmptyPassage> {
    NGramProfile::build(text, n)
}

/// Normalized dot product of two profiles, in `[0, 1]`.
///
/// Shared grams are visited in sorted order from either side, so the result
/// is bit-for-bit symmetric, and equal profiles give exactly 1.
pub fn similarity(p: &NGramProfile, q: &NGramProfile) -> f64 {
    let mut dot = 0.0;
    let (mut a, mut b) = (p.weights().peekable(), q.weights().peekable());
    while let (Some(&(ga, x)), Some(&(gb, y))) = (a.peek(), b.peek()) {
        match ga.cmp(gb) {
            Ordering::Less => {
                a.next();
            }
            Ordering::Greater => {
                b.next();
            }
            Ordering::Equal => {
                dot += x * y;
                a.next();
                b.next();
            }
        }
    }
    let denom = (p.norm_sq * q.norm_sq).sqrt();
    if denom == 0.0 {
        return 0.0;
    }
    dot / denom
}

/// Convenience for comparing raw strings.
pub fn text_similarity(a: &str, b: &str, n: usize) -> Result<f64, EmptyPassage> {
    Ok(similarity(&build_profile(a, n)?, &build_profile(b, n)?))
}
