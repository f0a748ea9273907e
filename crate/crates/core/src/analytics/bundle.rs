use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::{
    segment_timeline, ExecutionEvent, Millis, RevisionHistory, SessionKind, Snapshot,
};
use crate::identity::{
    assign_initial_ids, line_identities_from_diffs, propagate_ids, IdentityMatrix, MatchingRule,
    DEFAULT_THRESHOLD,
};
use crate::segment::{split, split_sentences, Granularity, SegmentationConfig};

use super::pv::*;
use super::{compute_stats, DescriptiveStats};

pub const SCHEMA_VERSION: &str = "pvbundle/1";
pub const DEFAULT_TOP_K: usize = 25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("threshold {0} is outside [0, 1]")]
    Threshold(f64),
    #[error("top-k must be at least 1")]
    TopK,
    #[error("idle gap threshold must be positive")]
    IdleGap,
}

/// Everything that shapes an analysis besides the session itself.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisParams {
    pub segmentation: SegmentationConfig,
    pub threshold: f64,
    pub idle_gap_ms: u64,
    pub top_k: usize,
    pub matching: MatchingRule,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            segmentation: SegmentationConfig::default(),
            threshold: DEFAULT_THRESHOLD,
            idle_gap_ms: crate::history::DEFAULT_IDLE_GAP_MS,
            top_k: DEFAULT_TOP_K,
            matching: MatchingRule::OneToOne,
        }
    }
}

impl AnalysisParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(ParamError::Threshold(self.threshold));
        }
        if self.top_k == 0 {
            return Err(ParamError::TopK);
        }
        if self.idle_gap_ms == 0 {
            return Err(ParamError::IdleGap);
        }
        Ok(())
    }
}

/// Parameters echoed into the bundle so a rendering can be reproduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleConfig {
    pub kind: SessionKind,
    pub capture_interval_ms: u64,
    pub ngram_n: usize,
    pub word_delimiters: String,
    pub sentence_delimiters: String,
    pub threshold: f64,
    pub matching: MatchingRule,
    pub idle_gap_ms: u64,
    pub top_k: usize,
    /// Typing rate is reported as 0 for steps that cross an idle gap.
    pub rate_excludes_idle_gaps: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvBundle {
    pub schema: String,
    pub config: BundleConfig,
    pub stats: DescriptiveStats,
    /// Full snapshot contents, so any pair can be compared on demand.
    pub snapshots: Vec<Snapshot>,
    pub active_spans: Vec<(Millis, Millis)>,
    pub pv1_frames: Vec<PlaybackFrame>,
    pub pv2_area: Vec<AreaSeries>,
    pub pv3_active: Vec<ActivityGrid>,
    pub pv4_words: Vec<WordCount>,
    pub pv4_removed_words: Vec<WordCount>,
    pub pv5_heatmap: Heatmap,
    pub pv6_series: Vec<TypingPoint>,
    pub pv7_timeline: Vec<ChangePoint>,
    pub pv8_executions: Vec<ExecutionEvent>,
}

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("malformed bundle: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported bundle schema `{0}`")]
    Schema(String),
}

impl PvBundle {
    /// Pretty-printed JSON with a trailing newline. Keys appear in a fixed
    /// order, so equal bundles serialize to equal bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundle serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, BundleError> {
        let bundle: PvBundle = serde_json::from_str(s)?;
        if bundle.schema != SCHEMA_VERSION {
            return Err(BundleError::Schema(bundle.schema));
        }
        Ok(bundle)
    }

    pub fn contents(&self) -> Vec<&str> {
        self.snapshots.iter().map(|s| s.content.as_str()).collect()
    }

    pub fn diff(&self, i: usize, j: usize) -> Result<PairDiff, IndexOutOfRange> {
        diff_between(&self.contents(), i, j)
    }
}

fn text_identities(h: &RevisionHistory, g: Granularity, params: &AnalysisParams) -> IdentityMatrix {
    let cfg = &params.segmentation;
    let passages = h
        .snapshots()
        .iter()
        .map(|s| split(&s.content, g, cfg))
        .collect();
    propagate_ids(
        assign_initial_ids(passages, g),
        cfg,
        params.threshold,
        params.matching,
    )
}

/// Run every builder over a history. Text sessions are tracked at paragraph
/// and sentence level; code sessions at line level.
pub fn build_bundle(h: &RevisionHistory, params: &AnalysisParams) -> Result<PvBundle, ParamError> {
    params.validate()?;
    let cfg = &params.segmentation;
    let seg = segment_timeline(h, params.idle_gap_ms);

    let matrices: Vec<IdentityMatrix> = match h.kind() {
        SessionKind::Text => vec![
            text_identities(h, Granularity::Paragraph, params),
            text_identities(h, Granularity::Sentence, params),
        ],
        SessionKind::Code => vec![line_identities_from_diffs(h)],
    };
    let pv5_heatmap = match h.kind() {
        SessionKind::Text => build_pv5_heatmap(&split_sentences(&h.last().content, cfg), cfg),
        SessionKind::Code => Heatmap {
            sentences: Vec::new(),
            matrix: Vec::new(),
        },
    };

    Ok(PvBundle {
        schema: SCHEMA_VERSION.to_owned(),
        config: BundleConfig {
            kind: h.kind(),
            capture_interval_ms: h.capture_interval_ms(),
            ngram_n: cfg.ngram_n(),
            word_delimiters: cfg.word_delimiters().iter().collect(),
            sentence_delimiters: cfg.sentence_delimiters().iter().collect(),
            threshold: params.threshold,
            matching: params.matching,
            idle_gap_ms: params.idle_gap_ms,
            top_k: params.top_k,
            rate_excludes_idle_gaps: true,
        },
        stats: compute_stats(h, cfg, &seg),
        snapshots: h.snapshots().to_vec(),
        active_spans: seg.active_spans.clone(),
        pv1_frames: build_pv1_frames(h),
        pv2_area: matrices.iter().map(build_pv2_area).collect(),
        pv3_active: matrices.iter().map(|m| build_pv3_active(m, h)).collect(),
        pv4_words: build_pv4_words(h, cfg, params.top_k),
        pv4_removed_words: build_removed_words(h, cfg, params.top_k),
        pv5_heatmap,
        pv6_series: build_pv6_series(h, &seg),
        pv7_timeline: build_pv7_timeline(h),
        pv8_executions: h.executions().to_vec(),
    })
}
