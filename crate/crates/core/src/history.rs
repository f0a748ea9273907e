//! Session data model: timestamped full-content snapshots, code execution
//! events, and idle-gap segmentation of the editing timeline.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Milliseconds since the Unix epoch.
pub type Millis = i64;

pub const DEFAULT_CAPTURE_INTERVAL_MS: u64 = 5_000;
pub const DEFAULT_IDLE_GAP_MS: u64 = 60_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionKind {
    Text,
    Code,
}

impl SessionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionKind::Text => "text",
            SessionKind::Code => "code",
        }
    }
}

impl fmt::Display for SessionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SessionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(SessionKind::Text),
            "code" => Ok(SessionKind::Code),
            other => Err(format!("unknown session kind `{other}`")),
        }
    }
}

/// The complete document at one instant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: Millis,
    pub content: String,
}

impl Snapshot {
    pub fn new(t: Millis, content: impl Into<String>) -> Self {
        Snapshot {
            t,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionEvent {
    pub t: Millis,
    pub success: bool,
    pub detail: Option<String>,
}

/// Unvalidated session contents, as read from disk or assembled by a
/// capture loop. Records may be in any order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawHistory {
    pub kind: SessionKind,
    pub capture_interval_ms: u64,
    pub snapshots: Vec<Snapshot>,
    pub executions: Vec<ExecutionEvent>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HistoryError {
    #[error("session contains no snapshots")]
    EmptyHistory,
    #[error("two snapshots share timestamp {0}")]
    DuplicateTimestamp(Millis),
}

/// Non-fatal problems discovered while normalizing a history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadWarning {
    ExecutionOutsideSession { t: Millis },
    ExecutionInTextSession { t: Millis },
}

impl fmt::Display for LoadWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadWarning::ExecutionOutsideSession { t } => {
                write!(
                    f,
                    "execution event at {t} lies outside the snapshot range; dropped"
                )
            }
            LoadWarning::ExecutionInTextSession { t } => {
                write!(
                    f,
                    "execution event at {t} recorded in a text session; dropped"
                )
            }
        }
    }
}

/// A validated, normalized session. Construct through [`validate_history`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevisionHistory {
    kind: SessionKind,
    capture_interval_ms: u64,
    snapshots: Vec<Snapshot>,
    executions: Vec<ExecutionEvent>,
}

impl RevisionHistory {
    pub fn kind(&self) -> SessionKind {
        self.kind
    }

    pub fn capture_interval_ms(&self) -> u64 {
        self.capture_interval_ms
    }

    /// Never empty.
    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn executions(&self) -> &[ExecutionEvent] {
        &self.executions
    }

    pub fn first(&self) -> &Snapshot {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Snapshot {
        &self.snapshots[self.snapshots.len() - 1]
    }

    pub fn elapsed_ms(&self) -> u64 {
        (self.last().t - self.first().t) as u64
    }

    pub fn contents(&self) -> Vec<&str> {
        self.snapshots.iter().map(|s| s.content.as_str()).collect()
    }

    pub fn into_raw(self) -> RawHistory {
        RawHistory {
            kind: self.kind,
            capture_interval_ms: self.capture_interval_ms,
            snapshots: self.snapshots,
            executions: self.executions,
        }
    }

    pub fn to_raw(&self) -> RawHistory {
        self.clone().into_raw()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Validated {
    pub history: RevisionHistory,
    pub warnings: Vec<LoadWarning>,
}

/// Sorts snapshots by time, collapses runs of unchanged content onto their
/// earliest snapshot, and drops execution events that fall outside the
/// snapshot range.
pub fn validate_history(raw: RawHistory) -> Result<Validated, HistoryError> {
    let RawHistory {
        kind,
        capture_interval_ms,
        mut snapshots,
        mut executions,
    } = raw;

    if snapshots.is_empty() {
        return Err(HistoryError::EmptyHistory);
    }
    snapshots.sort_by_key(|s| s.t);
    if let Some(w) = snapshots.windows(2).find(|w| w[0].t == w[1].t) {
        return Err(HistoryError::DuplicateTimestamp(w[0].t));
    }
    snapshots.dedup_by(|later, earlier| later.content == earlier.content);

    let first_t = snapshots[0].t;
    let last_t = snapshots[snapshots.len() - 1].t;
    let mut warnings = Vec::new();
    executions.sort_by_key(|e| e.t);
    executions.retain(|e| {
        if kind == SessionKind::Text {
            warnings.push(LoadWarning::ExecutionInTextSession { t: e.t });
            false
        } else if e.t < first_t || e.t > last_t {
            warnings.push(LoadWarning::ExecutionOutsideSession { t: e.t });
            false
        } else {
            true
        }
    });

    Ok(Validated {
        history: RevisionHistory {
            kind,
            capture_interval_ms,
            snapshots,
            executions,
        },
        warnings,
    })
}

/// Active editing time, with idle gaps between snapshots cut out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineSegmentation {
    /// Maximal runs of consecutive non-idle gaps, as `(start_t, end_t)`.
    pub active_spans: Vec<(Millis, Millis)>,
    pub idle_gap_threshold_ms: u64,
}

impl TimelineSegmentation {
    pub fn total_active_ms(&self) -> u64 {
        self.active_spans
            .iter()
            .map(|(start, end)| (end - start) as u64)
            .sum()
    }

    pub fn is_idle_gap(&self, gap_ms: u64) -> bool {
        gap_ms > self.idle_gap_threshold_ms
    }
}

/// A gap strictly longer than `idle_gap_threshold_ms` is idle.
pub fn segment_timeline(h: &RevisionHistory, idle_gap_threshold_ms: u64) -> TimelineSegmentation {
    let mut spans: Vec<(Millis, Millis)> = Vec::new();
    for w in h.snapshots().windows(2) {
        let (start, end) = (w[0].t, w[1].t);
        if (end - start) as u64 > idle_gap_threshold_ms {
            continue;
        }
        match spans.last_mut() {
            Some(last) if last.1 == start => last.1 = end,
            _ => spans.push((start, end)),
        }
    }
    TimelineSegmentation {
        active_spans: spans,
        idle_gap_threshold_ms,
    }
}
