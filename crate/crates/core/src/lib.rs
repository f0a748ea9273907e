//! Process analytics for revision histories of a single text or code
//! document: passage identities across snapshots, n-gram similarity,
//! shortest-edit-script diffs, and the data behind eight process
//! visualizations, plus an encrypted at-rest container for sessions.

pub mod analytics;
pub mod diff;
pub mod history;
pub mod identity;
pub mod segment;
pub mod session;
pub mod similarity;
pub mod store;

use thiserror::Error;

pub use analytics::{
    build_bundle, compute_stats, render_stats_table, AnalysisParams, DescriptiveStats, PvBundle,
};
pub use diff::{added_removed_counts, diff, playback_frame, DiffScript, DiffUnit, Label};
pub use history::{
    segment_timeline, validate_history, ExecutionEvent, Millis, RawHistory, RevisionHistory,
    SessionKind, Snapshot, TimelineSegmentation, Validated,
};
pub use identity::{IdentityMatrix, MatchingRule, PassageId};
pub use segment::{Granularity, Passage, SegmentationConfig};
pub use session::SessionFile;
pub use similarity::{similarity, NGramProfile};

/// Failure to turn session bytes into a usable history.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Store(#[from] store::StoreError),
    #[error("session is encrypted; a passcode is required")]
    PasscodeRequired,
    #[error(transparent)]
    Parse(#[from] session::ParseError),
    #[error(transparent)]
    History(#[from] history::HistoryError),
}

/// Decrypt when needed, returning the plaintext session file bytes.
pub fn open_session_bytes(bytes: &[u8], passcode: Option<&str>) -> Result<Vec<u8>, LoadError> {
    if store::is_container(bytes) {
        let passcode = passcode.ok_or(LoadError::PasscodeRequired)?;
        Ok(store::decrypt_bytes(bytes, passcode)?)
    } else {
        Ok(bytes.to_vec())
    }
}

/// Parse and validate a plaintext or encrypted session.
pub fn load_session(bytes: &[u8], passcode: Option<&str>) -> Result<Validated, LoadError> {
    let plain = open_session_bytes(bytes, passcode)?;
    let file = SessionFile::parse(&plain)?;
    Ok(validate_history(file.into_raw())?)
}
