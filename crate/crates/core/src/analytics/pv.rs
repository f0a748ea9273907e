use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::{added_removed_counts, diff_lines, playback_frame, DiffScript, Label, Span};
use crate::history::{Millis, RevisionHistory, TimelineSegmentation};
use crate::identity::{IdentityMatrix, PassageId};
use crate::segment::{tokenize_words, Granularity, Passage, SegmentationConfig};
use crate::similarity::{similarity, NGramProfile};

use super::MS_PER_MINUTE;

/// One playback step: the change from the previous snapshot to `index`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaybackFrame {
    pub index: usize,
    pub t: Millis,
    pub spans: Vec<Span>,
}

pub fn build_pv1_frames(h: &RevisionHistory) -> Vec<PlaybackFrame> {
    h.snapshots()
        .windows(2)
        .enumerate()
        .map(|(i, w)| PlaybackFrame {
            index: i + 1,
            t: w[1].t,
            spans: playback_frame(&w[0].content, &w[1].content),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AreaTrack {
    pub id: PassageId,
    pub first_index: usize,
    /// Character length at each snapshot; 0 where the passage is absent.
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AreaSeries {
    pub granularity: Granularity,
    /// Stacked in order of first appearance.
    pub tracks: Vec<AreaTrack>,
}

pub fn build_pv2_area(m: &IdentityMatrix) -> AreaSeries {
    let steps = m.len();
    let mut tracks: Vec<AreaTrack> = Vec::new();
    let mut slot: HashMap<PassageId, usize> = HashMap::new();
    for (i, snapshot) in m.snapshots().iter().enumerate() {
        for pv in snapshot {
            let k = *slot.entry(pv.id).or_insert_with(|| {
                tracks.push(AreaTrack {
                    id: pv.id,
                    first_index: i,
                    sizes: vec![0; steps],
                });
                tracks.len() - 1
            });
            // Adds rather than assigns so that the literal matching rule,
            // which can repeat an ID within a snapshot, still conserves size.
            tracks[k].sizes[i] += pv.passage.char_len();
        }
    }
    AreaSeries {
        granularity: m.granularity(),
        tracks,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveCell {
    pub id: PassageId,
    pub text: String,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityStep {
    pub t: Millis,
    pub passages: Vec<ActiveCell>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityGrid {
    pub granularity: Granularity,
    pub steps: Vec<ActivityStep>,
}

impl ActivityGrid {
    pub fn active_ids(&self, step: usize) -> Vec<PassageId> {
        self.steps[step]
            .passages
            .iter()
            .filter(|c| c.active)
            .map(|c| c.id)
            .collect()
    }
}

/// A passage is active when it is new or its text changed since the
/// previous snapshot. Everything in the first snapshot is active.
pub fn build_pv3_active(m: &IdentityMatrix, h: &RevisionHistory) -> ActivityGrid {
    let mut steps = Vec::with_capacity(m.len());
    let mut previous: HashMap<PassageId, &str> = HashMap::new();
    for (i, snapshot) in m.snapshots().iter().enumerate() {
        let passages = snapshot
            .iter()
            .map(|pv| ActiveCell {
                id: pv.id,
                text: pv.passage.text.clone(),
                active: i == 0 || previous.get(&pv.id) != Some(&pv.passage.text.as_str()),
            })
            .collect();
        steps.push(ActivityStep {
            t: h.snapshots()[i].t,
            passages,
        });
        previous = snapshot
            .iter()
            .map(|pv| (pv.id, pv.passage.text.as_str()))
            .collect();
    }
    ActivityGrid {
        granularity: m.granularity(),
        steps,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordCount {
    pub word: String,
    pub count: usize,
}

fn ranked(counts: BTreeMap<&str, usize>, top_k: usize) -> Vec<WordCount> {
    let mut words: Vec<WordCount> = counts
        .into_iter()
        .map(|(word, count)| WordCount {
            word: word.to_owned(),
            count,
        })
        .collect();
    // The map iterates lexicographically, so a stable sort on count keeps
    // ties in lexicographic order.
    words.sort_by_key(|w| std::cmp::Reverse(w.count));
    words.truncate(top_k);
    words
}

/// Word frequencies of the final snapshot, most frequent first.
pub fn build_pv4_words(
    h: &RevisionHistory,
    cfg: &SegmentationConfig,
    top_k: usize,
) -> Vec<WordCount> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for w in tokenize_words(&h.last().content, cfg) {
        *counts.entry(w).or_default() += 1;
    }
    ranked(counts, top_k)
}

/// Words that disappeared between consecutive snapshots, counted as the
/// multiset difference of each step's word lists.
pub fn build_removed_words(
    h: &RevisionHistory,
    cfg: &SegmentationConfig,
    top_k: usize,
) -> Vec<WordCount> {
    let mut removed: BTreeMap<&str, usize> = BTreeMap::new();
    for pair in h.snapshots().windows(2) {
        let mut next: HashMap<&str, usize> = HashMap::new();
        for w in tokenize_words(&pair[1].content, cfg) {
            *next.entry(w).or_default() += 1;
        }
        for w in tokenize_words(&pair[0].content, cfg) {
            match next.get_mut(w) {
                Some(c) if *c > 0 => *c -= 1,
                _ => *removed.entry(w).or_default() += 1,
            }
        }
    }
    ranked(removed, top_k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub sentences: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

/// Pairwise similarity of the given sentences.
pub fn build_pv5_heatmap(final_sentences: &[Passage], cfg: &SegmentationConfig) -> Heatmap {
    let profiles: Vec<Option<NGramProfile>> = final_sentences
        .iter()
        .map(|p| NGramProfile::build(&p.text, cfg.ngram_n()).ok())
        .collect();
    let k = profiles.len();
    let mut matrix = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let s = match (&profiles[i], &profiles[j]) {
                (Some(p), Some(q)) => similarity(p, q),
                _ => 0.0,
            };
            matrix[i][j] = s;
            matrix[j][i] = s;
        }
    }
    Heatmap {
        sentences: final_sentences.iter().map(|p| p.text.clone()).collect(),
        matrix,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypingPoint {
    pub t: Millis,
    pub doc_length: usize,
    pub chars_per_minute: f64,
}

/// Document length at each snapshot, and the typing rate of the step that
/// produced it. Steps across an idle gap report a rate of 0.
pub fn build_pv6_series(h: &RevisionHistory, seg: &TimelineSegmentation) -> Vec<TypingPoint> {
    let snaps = h.snapshots();
    snaps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let chars_per_minute = if i == 0 {
                0.0
            } else {
                let gap = (s.t - snaps[i - 1].t) as u64;
                if seg.is_idle_gap(gap) {
                    0.0
                } else {
                    let (added, _) = added_removed_counts(&snaps[i - 1].content, &s.content);
                    added as f64 * MS_PER_MINUTE / gap as f64
                }
            };
            TypingPoint {
                t: s.t,
                doc_length: s.content.chars().count(),
                chars_per_minute,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangePoint {
    pub t: Millis,
    pub chars_added: usize,
    pub chars_removed: usize,
}

/// Characters added and removed per step; the first snapshot counts as
/// entirely added.
pub fn build_pv7_timeline(h: &RevisionHistory) -> Vec<ChangePoint> {
    let snaps = h.snapshots();
    let first = ChangePoint {
        t: snaps[0].t,
        chars_added: snaps[0].content.chars().count(),
        chars_removed: 0,
    };
    std::iter::once(first)
        .chain(snaps.windows(2).map(|w| {
            let (chars_added, chars_removed) = added_removed_counts(&w[0].content, &w[1].content);
            ChangePoint {
                t: w[1].t,
                chars_added,
                chars_removed,
            }
        }))
        .collect()
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("snapshot index {index} out of range (session has {len})")]
pub struct IndexOutOfRange {
    pub index: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDiff {
    pub from: usize,
    pub to: usize,
    pub lines_added: usize,
    pub lines_removed: usize,
    pub script: DiffScript,
}

/// Line diff between any two snapshot contents, in either direction.
pub fn diff_between<S: AsRef<str>>(
    contents: &[S],
    i: usize,
    j: usize,
) -> Result<PairDiff, IndexOutOfRange> {
    let len = contents.len();
    for index in [i, j] {
        if index >= len {
            return Err(IndexOutOfRange { index, len });
        }
    }
    let script = diff_lines(contents[i].as_ref(), contents[j].as_ref());
    Ok(PairDiff {
        from: i,
        to: j,
        lines_added: script.count(Label::Added),
        lines_removed: script.count(Label::Removed),
        script,
    })
}

pub fn any_to_any_diff(
    h: &RevisionHistory,
    i: usize,
    j: usize,
) -> Result<PairDiff, IndexOutOfRange> {
    diff_between(&h.contents(), i, j)
}
