//! Passage identity tracking across revisions.
//!
//! Every passage in every snapshot starts with its own ID. Walking adjacent
//! snapshot pairs from the newest pair back to the oldest, a passage at `t`
//! that matches a passage at `t + 1` takes over that passage's ID, so the
//! ID a passage carries in the final document flows back to its origin.
//! Text passages are matched by n-gram similarity; code lines are matched
//! by a line diff.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::diff::{diff_ops, DiffOp};
use crate::history::RevisionHistory;
use crate::segment::{split_lines, Granularity, Passage, SegmentationConfig};
use crate::similarity::{similarity, NGramProfile};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PassageId(pub u64);

impl fmt::Display for PassageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for PassageId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PassageId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map(PassageId).map_err(serde::de::Error::custom)
    }
}

/// How candidate pairs between two adjacent snapshots are turned into links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchingRule {
    /// Pairs are taken greedily by descending similarity (ties: lower
    /// ordinal at `t + 1`, then lower ordinal at `t`); each passage is
    /// linked at most once, so IDs stay unique within a snapshot.
    #[default]
    OneToOne,
    /// Each passage at `t` independently takes the ID of its most similar
    /// passage at `t + 1` (first one on ties). Several passages may end up
    /// sharing an ID.
    PerPassage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassageVersion {
    pub passage: Passage,
    pub id: PassageId,
    pub snapshot_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityMatrix {
    snapshots: Vec<Vec<PassageVersion>>,
    /// `links[t][i]` is the ordinal at `t + 1` passage `i` of snapshot `t`
    /// was identified with.
    links: Vec<Vec<Option<usize>>>,
    threshold: Option<f64>,
    granularity: Granularity,
}

impl IdentityMatrix {
    pub fn snapshots(&self) -> &[Vec<PassageVersion>] {
        &self.snapshots
    }

    pub fn links(&self) -> &[Vec<Option<usize>>] {
        &self.links
    }

    /// Similarity threshold used for propagation, if any.
    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn ids(&self, snapshot: usize) -> Vec<PassageId> {
        self.snapshots[snapshot].iter().map(|pv| pv.id).collect()
    }

    /// Number of passages that took over an ID from the next snapshot.
    pub fn adopted_count(&self) -> usize {
        self.links.iter().flatten().filter(|l| l.is_some()).count()
    }

    fn reset_links(&mut self) {
        self.links = self.snapshots.iter().map(|s| vec![None; s.len()]).collect();
    }
}

/// Give every passage a distinct ID, numbered in document order.
pub fn assign_initial_ids(
    snapshots: Vec<Vec<Passage>>,
    granularity: Granularity,
) -> IdentityMatrix {
    let mut next = 0u64;
    let snapshots: Vec<Vec<PassageVersion>> = snapshots
        .into_iter()
        .enumerate()
        .map(|(snapshot_index, passages)| {
            passages
                .into_iter()
                .map(|passage| {
                    next += 1;
                    PassageVersion {
                        passage,
                        id: PassageId(next - 1),
                        snapshot_index,
                    }
                })
                .collect()
        })
        .collect();
    let mut m = IdentityMatrix {
        snapshots,
        links: Vec::new(),
        threshold: None,
        granularity,
    };
    m.reset_links();
    m
}

// Empty passages (blank lines) have no profile; two of them are identical,
// one against text shares nothing.
fn pair_similarity(p: Option<&NGramProfile>, q: Option<&NGramProfile>) -> f64 {
    match (p, q) {
        (Some(p), Some(q)) => similarity(p, q),
        (None, None) => 1.0,
        _ => 0.0,
    }
}

/// Links between two adjacent snapshots, as `links[i] = Some(j)`.
fn match_pair(
    older: &[Option<NGramProfile>],
    newer: &[Option<NGramProfile>],
    threshold: f64,
    rule: MatchingRule,
) -> Vec<Option<usize>> {
    let mut links = vec![None; older.len()];
    match rule {
        MatchingRule::PerPassage => {
            for (i, p) in older.iter().enumerate() {
                let mut best = -1.0;
                let mut best_j = None;
                for (j, q) in newer.iter().enumerate() {
                    let s = pair_similarity(p.as_ref(), q.as_ref());
                    if s > best {
                        best = s;
                        best_j = Some(j);
                    }
                }
                if best > threshold {
                    links[i] = best_j;
                }
            }
        }
        MatchingRule::OneToOne => {
            let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
            for (i, p) in older.iter().enumerate() {
                for (j, q) in newer.iter().enumerate() {
                    let s = pair_similarity(p.as_ref(), q.as_ref());
                    if s > threshold {
                        candidates.push((s, j, i));
                    }
                }
            }
            candidates.sort_by(|a, b| match b.0.total_cmp(&a.0) {
                Ordering::Equal => (a.1, a.2).cmp(&(b.1, b.2)),
                other => other,
            });
            let mut newer_taken = vec![false; newer.len()];
            for (_, j, i) in candidates {
                if links[i].is_none() && !newer_taken[j] {
                    links[i] = Some(j);
                    newer_taken[j] = true;
                }
            }
        }
    }
    links
}

/// Carry IDs backward from the latest snapshot pair to the first.
/// Links need similarity strictly above `threshold`.
pub fn propagate_ids(
    mut m: IdentityMatrix,
    cfg: &SegmentationConfig,
    threshold: f64,
    rule: MatchingRule,
) -> IdentityMatrix {
    let n = cfg.ngram_n();
    let profiles: Vec<Vec<Option<NGramProfile>>> = m
        .snapshots
        .iter()
        .map(|s| {
            s.iter()
                .map(|pv| NGramProfile::build(&pv.passage.text, n).ok())
                .collect()
        })
        .collect();
    m.reset_links();
    for t in (0..m.snapshots.len().saturating_sub(1)).rev() {
        let links = match_pair(&profiles[t], &profiles[t + 1], threshold, rule);
        apply_links(&mut m, t, links);
    }
    m.threshold = Some(threshold);
    m
}

fn apply_links(m: &mut IdentityMatrix, t: usize, links: Vec<Option<usize>>) {
    let (older, newer) = m.snapshots.split_at_mut(t + 1);
    for (pv, link) in older[t].iter_mut().zip(&links) {
        if let Some(j) = link {
            pv.id = newer[0][*j].id;
        }
    }
    m.links[t] = links;
}

/// Line identities for code: lines the line diff marks common between
/// adjacent snapshots share an ID; removed lines keep their own.
pub fn line_identities_from_diffs(history: &RevisionHistory) -> IdentityMatrix {
    let lines: Vec<Vec<Passage>> = history
        .snapshots()
        .iter()
        .map(|s| split_lines(&s.content))
        .collect();
    let mut m = assign_initial_ids(lines, Granularity::Line);
    for t in (0..m.snapshots.len().saturating_sub(1)).rev() {
        let older: Vec<&str> = m.snapshots[t]
            .iter()
            .map(|pv| pv.passage.text.as_str())
            .collect();
        let newer: Vec<&str> = m.snapshots[t + 1]
            .iter()
            .map(|pv| pv.passage.text.as_str())
            .collect();
        let mut links = vec![None; older.len()];
        for op in diff_ops(&older, &newer) {
            if let DiffOp::Equal { a, b } = op {
                links[a] = Some(b);
            }
        }
        apply_links(&mut m, t, links);
    }
    m
}

/// The first snapshot each ID appears in.
pub fn passage_origin_times(m: &IdentityMatrix) -> BTreeMap<PassageId, usize> {
    let mut origins = BTreeMap::new();
    for (i, snapshot) in m.snapshots.iter().enumerate() {
        for pv in snapshot {
            origins.entry(pv.id).or_insert(i);
        }
    }
    origins
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::{validate_history, RawHistory, SessionKind, Snapshot};
    use crate::segment::split_sentences;
    use crate::similarity::text_similarity;
    use std::collections::HashSet;

    fn sentences(texts: &[&[&str]]) -> Vec<Vec<Passage>> {
        texts
            .iter()
            .map(|s| {
                s.iter()
                    .enumerate()
                    .map(|(ordinal, t)| Passage {
                        text: (*t).to_owned(),
                        ordinal,
                        granularity: Granularity::Sentence,
                    })
                    .collect()
            })
            .collect()
    }

    fn propagate(texts: &[&[&str]], threshold: f64) -> IdentityMatrix {
        let m = assign_initial_ids(sentences(texts), Granularity::Sentence);
        propagate_ids(
            m,
            &SegmentationConfig::default(),
            threshold,
            MatchingRule::OneToOne,
        )
    }

    fn code(snaps: &[&str]) -> RevisionHistory {
        let raw = RawHistory {
            kind: SessionKind::Code,
            capture_interval_ms: 5000,
            snapshots: snaps
                .iter()
                .enumerate()
                .map(|(i, c)| Snapshot::new(i as i64 * 5000, *c))
                .collect(),
            executions: vec![],
        };
        validate_history(raw).unwrap().history
    }

    #[test]
    fn initial_ids_are_distinct() {
        let m = assign_initial_ids(sentences(&[&["a", "b", "c"]]), Granularity::Sentence);
        assert_eq!(m.ids(0).iter().collect::<HashSet<_>>().len(), 3);

        let m = assign_initial_ids(
            sentences(&[&["x y", "z"], &["x y", "z"]]),
            Granularity::Sentence,
        );
        let all: HashSet<PassageId> = (0..2).flat_map(|i| m.ids(i)).collect();
        assert_eq!(all.len(), 4);

        assert!(assign_initial_ids(vec![], Granularity::Sentence).is_empty());
    }

    #[test]
    fn identical_snapshots_share_ids() {
        let m = propagate(
            &[&["One here.", "Two there."], &["One here.", "Two there."]],
            0.5,
        );
        assert_eq!(m.ids(0), m.ids(1));
    }

    #[test]
    fn inserted_passage_originates_late() {
        let older = "The cat sat on the mat.";
        let intro = "Intro line here.";
        assert!(text_similarity(older, intro, 5).unwrap() <= 0.5);
        let m = propagate(&[&[older], &[intro, older]], 0.5);
        assert_eq!(m.ids(0)[0], m.ids(1)[1]);
        assert_ne!(m.ids(1)[0], m.ids(1)[1]);
        let origins = passage_origin_times(&m);
        assert_eq!(origins[&m.ids(1)[0]], 1);
        assert_eq!(origins[&m.ids(1)[1]], 0);
    }

    #[test]
    fn dissimilar_passages_keep_their_ids() {
        let m = propagate(&[&["alpha"], &["omega"]], 0.5);
        assert_ne!(m.ids(0), m.ids(1));
        assert_eq!(m.adopted_count(), 0);
    }

    #[test]
    fn threshold_is_strict() {
        // "abcdef" vs "abcdeg" is exactly one half.
        let m = propagate(&[&["abcdef"], &["abcdeg"]], 0.5);
        assert_eq!(m.adopted_count(), 0);
        let m = propagate(&[&["abcdef"], &["abcdeg"]], 0.49);
        assert_eq!(m.adopted_count(), 1);
    }

    #[test]
    fn one_to_one_keeps_ids_unique_where_literal_rule_does_not() {
        let texts: &[&[&str]] = &[&["The cat sat.", "The cat sat!"], &["The cat sat."]];
        let m = propagate(texts, 0.3);
        assert_ne!(m.ids(0)[0], m.ids(0)[1]);
        assert_eq!(m.ids(0)[0], m.ids(1)[0]);

        let literal = propagate_ids(
            assign_initial_ids(sentences(texts), Granularity::Sentence),
            &SegmentationConfig::default(),
            0.3,
            MatchingRule::PerPassage,
        );
        assert_eq!(literal.ids(0)[0], literal.ids(0)[1]);
    }

    #[test]
    fn ties_prefer_lower_ordinals() {
        // Both older duplicates match both newer duplicates equally.
        let m = propagate(
            &[
                &["Same words.", "Same words."],
                &["Same words.", "Same words."],
            ],
            0.5,
        );
        assert_eq!(m.links()[0], vec![Some(0), Some(1)]);
    }

    #[test]
    fn ids_chain_back_through_several_snapshots() {
        let cfg = SegmentationConfig::default();
        let snaps = [
            "The dog barks.",
            "The dog barks loudly.",
            "The dog barks loudly. Cats nap.",
        ];
        let m = assign_initial_ids(
            snaps.iter().map(|s| split_sentences(s, &cfg)).collect(),
            Granularity::Sentence,
        );
        let m = propagate_ids(m, &cfg, 0.5, MatchingRule::OneToOne);
        let dog = m.ids(2)[0];
        assert_eq!(m.ids(0), vec![dog]);
        assert_eq!(m.ids(1), vec![dog]);
        assert_eq!(passage_origin_times(&m)[&m.ids(2)[1]], 2);
    }

    #[test]
    fn propagation_is_idempotent_and_preserves_text() {
        let texts: &[&[&str]] = &[
            &["A b c d e.", "F g h."],
            &["A b c d e f.", "X y z."],
            &["A b c d e f g."],
        ];
        let once = propagate(texts, 0.4);
        let twice = propagate_ids(
            once.clone(),
            &SegmentationConfig::default(),
            0.4,
            MatchingRule::OneToOne,
        );
        assert_eq!(once, twice);
        for (s, expected) in once.snapshots().iter().zip(texts) {
            let got: Vec<&str> = s.iter().map(|pv| pv.passage.text.as_str()).collect();
            assert_eq!(&got, expected);
        }
    }

    #[test]
    fn origin_times() {
        let m = propagate(&[&["Only one."]], 0.5);
        assert!(passage_origin_times(&m).values().all(|&i| i == 0));
        assert!(passage_origin_times(&assign_initial_ids(vec![], Granularity::Line)).is_empty());

        let m = propagate(
            &[
                &["Alpha beta."],
                &["Alpha beta."],
                &["Alpha beta."],
                &["Alpha beta.", "Gamma delta."],
                &["Alpha beta.", "Gamma delta."],
            ],
            0.5,
        );
        let origins = passage_origin_times(&m);
        assert_eq!(origins[&m.ids(4)[1]], 3);
        assert_eq!(origins[&m.ids(4)[0]], 0);
    }

    #[test]
    fn code_lines_identical() {
        let m = line_identities_from_diffs(&code(&["a = 1\nb = 2", "a = 1\nb = 2\n"]));
        assert_eq!(m.ids(0), m.ids(1)[..2].to_vec());
    }

    #[test]
    fn code_line_inserted_in_middle() {
        let m = line_identities_from_diffs(&code(&[
            "x = 1\ny = 2\nz = 3",
            "x = 1\nnew = 0\ny = 2\nz = 3",
        ]));
        let (old, new) = (m.ids(0), m.ids(1));
        assert_eq!(old, vec![new[0], new[2], new[3]]);
        assert_eq!(passage_origin_times(&m)[&new[1]], 1);
    }

    #[test]
    fn code_total_rewrite() {
        let m = line_identities_from_diffs(&code(&["a\nb", "c\nd"]));
        assert_eq!(m.adopted_count(), 0);
    }

    #[test]
    fn code_similar_lines_are_not_matched_by_characters() {
        let m = line_identities_from_diffs(&code(&["for i in x:", "for j in x:"]));
        assert_eq!(m.adopted_count(), 0);
    }
}
