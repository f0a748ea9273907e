//! Reference implementations and fixtures shared by integration tests.
//! The oracles favour obviousness over speed.
#![allow(dead_code)]

use std::collections::BTreeSet;

use procviz_core::identity::{assign_initial_ids, propagate_ids};
use procviz_core::session::SessionFile;
use procviz_core::{
    similarity, validate_history, ExecutionEvent, Granularity, MatchingRule, NGramProfile, Passage,
    RawHistory, RevisionHistory, SegmentationConfig, SessionKind, Snapshot,
};

pub const ESSAY_PFS: &[u8] = include_bytes!("../fixtures/essay.pfs");
pub const MEAN_PFS: &[u8] = include_bytes!("../fixtures/mean.pfs");

pub fn load(bytes: &[u8]) -> RevisionHistory {
    let file = SessionFile::parse(bytes).expect("fixture parses");
    let v = validate_history(file.into_raw()).expect("fixture is valid");
    assert!(
        v.warnings.is_empty(),
        "fixture produced warnings: {:?}",
        v.warnings
    );
    v.history
}

pub fn history(
    kind: SessionKind,
    snaps: &[(i64, &str)],
    execs: Vec<ExecutionEvent>,
) -> RevisionHistory {
    validate_history(RawHistory {
        kind,
        capture_interval_ms: 5000,
        snapshots: snaps.iter().map(|&(t, c)| Snapshot::new(t, c)).collect(),
        executions: execs,
    })
    .unwrap()
    .history
}

/// Cosine over explicit count vectors indexed by the union of both gram
/// alphabets.
pub fn dense_cosine(a: &str, b: &str, n: usize) -> f64 {
    let grams = |s: &str| -> Vec<String> {
        let cs: Vec<char> = s.chars().collect();
        if cs.len() < n {
            return vec![s.to_owned()];
        }
        cs.windows(n).map(|w| w.iter().collect()).collect()
    };
    let ga = grams(a);
    let gb = grams(b);
    let alphabet: BTreeSet<&String> = ga.iter().chain(gb.iter()).collect();
    let freq =
        |g: &[String], key: &String| g.iter().filter(|x| *x == key).count() as f64 / g.len() as f64;
    let va: Vec<f64> = alphabet.iter().map(|k| freq(&ga, k)).collect();
    let vb: Vec<f64> = alphabet.iter().map(|k| freq(&gb, k)).collect();
    let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
    let na: f64 = va.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = vb.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Longest common subsequence length by dynamic programming.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// Rank of a candidate pair: higher similarity first, then lower newer
/// ordinal, then lower older ordinal.
fn precedes(sims: &[Vec<f64>], e: (usize, usize), f: (usize, usize)) -> bool {
    let (se, sf) = (sims[e.0][e.1], sims[f.0][f.1]);
    se > sf || (se == sf && (e.1, e.0) < (f.1, f.0))
}

/// The greedy matching, found without running a greedy pass: among every
/// partial matching over eligible pairs, the one in which each excluded
/// eligible pair is blocked by an included pair that shares an endpoint
/// and ranks higher. Exactly one such matching exists.
pub fn matching_oracle(sims: &[Vec<f64>], threshold: f64) -> Vec<Option<usize>> {
    let rows = sims.len();
    let cols = sims.first().map_or(0, Vec::len);
    let eligible: Vec<(usize, usize)> = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (i, j)))
        .filter(|&(i, j)| sims[i][j] > threshold)
        .collect();

    let mut found: Vec<Vec<Option<usize>>> = Vec::new();
    let mut current = vec![None; rows];
    let mut used = vec![false; cols];
    fn enumerate(
        i: usize,
        sims: &[Vec<f64>],
        eligible: &[(usize, usize)],
        current: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        found: &mut Vec<Vec<Option<usize>>>,
    ) {
        if i == current.len() {
            let included: Vec<(usize, usize)> = current
                .iter()
                .enumerate()
                .filter_map(|(a, b)| b.map(|b| (a, b)))
                .collect();
            let stable = eligible.iter().filter(|e| !included.contains(e)).all(|&e| {
                included
                    .iter()
                    .any(|&f| (f.0 == e.0 || f.1 == e.1) && precedes(sims, f, e))
            });
            if stable {
                found.push(current.clone());
            }
            return;
        }
        enumerate(i + 1, sims, eligible, current, used, found);
        for &(a, b) in eligible.iter().filter(|e| e.0 == i) {
            if !used[b] {
                used[b] = true;
                current[a] = Some(b);
                enumerate(i + 1, sims, eligible, current, used, found);
                current[a] = None;
                used[b] = false;
            }
        }
    }
    enumerate(0, sims, &eligible, &mut current, &mut used, &mut found);
    assert_eq!(found.len(), 1, "expected a unique stable matching");
    found.pop().unwrap()
}

/// IDs for every passage after backward propagation, computed from the
/// matching oracle. IDs are numbered in document order across snapshots.
/// Edge weights come from `sim`; similarity itself is checked elsewhere.
pub fn propagation_oracle(
    snapshots: &[Vec<&str>],
    sim: impl Fn(&str, &str) -> f64,
    threshold: f64,
) -> Vec<Vec<u64>> {
    let mut next = 0;
    let mut ids: Vec<Vec<u64>> = snapshots
        .iter()
        .map(|s| {
            s.iter()
                .map(|_| {
                    next += 1;
                    next - 1
                })
                .collect()
        })
        .collect();
    for t in (0..snapshots.len().saturating_sub(1)).rev() {
        let sims: Vec<Vec<f64>> = snapshots[t]
            .iter()
            .map(|a| snapshots[t + 1].iter().map(|b| sim(a, b)).collect())
            .collect();
        for (i, link) in matching_oracle(&sims, threshold).into_iter().enumerate() {
            if let Some(j) = link {
                ids[t][i] = ids[t + 1][j];
            }
        }
    }
    ids
}

/// IDs produced by the library for the same input.
pub fn propagated_ids(
    snapshots: &[Vec<&str>],
    cfg: &SegmentationConfig,
    threshold: f64,
) -> Vec<Vec<u64>> {
    let passages = snapshots
        .iter()
        .map(|s| {
            s.iter()
                .enumerate()
                .map(|(ordinal, text)| Passage {
                    text: (*text).to_owned(),
                    ordinal,
                    granularity: Granularity::Sentence,
                })
                .collect()
        })
        .collect();
    let m = propagate_ids(
        assign_initial_ids(passages, Granularity::Sentence),
        cfg,
        threshold,
        MatchingRule::OneToOne,
    );
    (0..m.len())
        .map(|i| m.ids(i).iter().map(|id| id.0).collect())
        .collect()
}

pub fn library_similarity(n: usize) -> impl Fn(&str, &str) -> f64 {
    move |a, b| {
        similarity(
            &NGramProfile::build(a, n).unwrap(),
            &NGramProfile::build(b, n).unwrap(),
        )
    }
}

/// Six sentences with a spread of pairwise similarities.
pub const POOL: [&str; 6] = [
    "The quick brown fox jumps.",
    "The quick brown fox leaps.",
    "A quick brown dog jumps high.",
    "Completely different words here.",
    "The slow green turtle crawls.",
    "Completely different words there.",
];

pub const ORACLE_THRESHOLDS: [f64; 3] = [0.3, 0.5, 0.8];

/// Every ordered selection of up to `max` pool entries, with or without
/// repeats.
pub fn arrangements(max: usize, repeats: bool) -> Vec<Vec<&'static str>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max {
        let mut next = Vec::new();
        for seq in &frontier {
            for k in 0..POOL.len() {
                if repeats || !seq.contains(&k) {
                    let mut s = seq.clone();
                    s.push(k);
                    next.push(s);
                }
            }
        }
        out.extend(next.iter().map(|s| s.iter().map(|&k| POOL[k]).collect()));
        frontier = next;
    }
    out
}

/// Every PV2 stack, at every snapshot, sums to the characters in that
/// snapshot's passages at the stack's granularity.
pub fn pv2_conserved(
    bundle: &procviz_core::PvBundle,
    cfg: &SegmentationConfig,
) -> Result<(), String> {
    for series in &bundle.pv2_area {
        for (i, snap) in bundle.snapshots.iter().enumerate() {
            let stacked: usize = series.tracks.iter().map(|t| t.sizes[i]).sum();
            let expected: usize =
                procviz_core::segment::split(&snap.content, series.granularity, cfg)
                    .iter()
                    .map(Passage::char_len)
                    .sum();
            if stacked != expected {
                return Err(format!(
                    "{:?} stack at snapshot {i}: {stacked} != {expected}",
                    series.granularity
                ));
            }
        }
    }
    Ok(())
}

/// Running PV7 added minus removed reaches the final document length.
pub fn pv7_conserved(bundle: &procviz_core::PvBundle) -> Result<(), String> {
    let net: i64 = bundle
        .pv7_timeline
        .iter()
        .map(|p| p.chars_added as i64 - p.chars_removed as i64)
        .sum();
    let last = bundle
        .snapshots
        .last()
        .map_or(0, |s| s.content.chars().count()) as i64;
    if net == last {
        Ok(())
    } else {
        Err(format!("net change {net} != final length {last}"))
    }
}
