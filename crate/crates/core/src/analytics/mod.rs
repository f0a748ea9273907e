//! Descriptive statistics and the data series behind the process
//! visualizations.

mod bundle;
mod pv;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::diff::added_removed_counts;
use crate::history::{RevisionHistory, TimelineSegmentation};
use crate::segment::{
    split_lines, split_paragraphs, split_sentences, tokenize_words, SegmentationConfig,
};

pub use bundle::{
    build_bundle, AnalysisParams, BundleConfig, BundleError, ParamError, PvBundle, SCHEMA_VERSION,
};
pub use pv::{
    any_to_any_diff, build_pv1_frames, build_pv2_area, build_pv3_active, build_pv4_words,
    build_pv5_heatmap, build_pv6_series, build_pv7_timeline, build_removed_words, diff_between,
    ActiveCell, ActivityGrid, ActivityStep, AreaSeries, AreaTrack, ChangePoint, Heatmap,
    IndexOutOfRange, PairDiff, PlaybackFrame, TypingPoint, WordCount,
};

const MS_PER_MINUTE: f64 = 60_000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub total_characters: usize,
    pub total_words: usize,
    pub total_sentences: usize,
    pub total_paragraphs: usize,
    pub total_lines: usize,
    pub elapsed_ms: u64,
    pub active_ms: u64,
    /// Characters added over all editing steps.
    pub typed_characters: usize,
    /// Typed characters per active minute; 0 without active time.
    pub avg_chars_per_minute: f64,
}

/// Counts describe the final snapshot; typing speed is taken over the
/// whole session's active time.
pub fn compute_stats(
    h: &RevisionHistory,
    cfg: &SegmentationConfig,
    seg: &TimelineSegmentation,
) -> DescriptiveStats {
    let last = &h.last().content;
    let typed_characters: usize = h
        .snapshots()
        .windows(2)
        .map(|w| added_removed_counts(&w[0].content, &w[1].content).0)
        .sum();
    let active_ms = seg.total_active_ms();
    let avg_chars_per_minute = if active_ms == 0 {
        0.0
    } else {
        typed_characters as f64 * MS_PER_MINUTE / active_ms as f64
    };
    DescriptiveStats {
        total_characters: last.chars().count(),
        total_words: tokenize_words(last, cfg).len(),
        total_sentences: split_sentences(last, cfg).len(),
        total_paragraphs: split_paragraphs(last).len(),
        total_lines: if last.is_empty() {
            0
        } else {
            split_lines(last).len()
        },
        elapsed_ms: h.elapsed_ms(),
        active_ms,
        typed_characters,
        avg_chars_per_minute,
    }
}

fn clock(ms: u64) -> String {
    let secs = ms / 1000;
    format!("{}:{:02}:{:02}", secs / 3600, secs / 60 % 60, secs % 60)
}

/// Two-column plain-text summary table.
pub fn render_stats_table(s: &DescriptiveStats) -> String {
    let rows = [
        ("Characters", s.total_characters.to_string()),
        ("Words", s.total_words.to_string()),
        ("Sentences", s.total_sentences.to_string()),
        ("Paragraphs", s.total_paragraphs.to_string()),
        ("Lines", s.total_lines.to_string()),
        ("Total time", clock(s.elapsed_ms)),
        ("Active time", clock(s.active_ms)),
        ("Characters typed", s.typed_characters.to_string()),
        (
            "Typing speed",
            format!("{:.1} chars/min", s.avg_chars_per_minute),
        ),
    ];
    let mut out = String::from("Descriptive statistics\n");
    for (label, value) in rows {
        let _ = writeln!(out, "  {label:<18}{value:>16}");
    }
    out
}
