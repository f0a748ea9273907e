//! Polling capture of a watched file into a session.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use log::warn;
use procviz_core::session::Record;
use procviz_core::{Millis, Snapshot};

use crate::error::CliError;
use crate::storage::SessionStore;

pub trait Clock {
    fn now_ms(&self) -> Millis;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> Millis {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as Millis)
            .unwrap_or(0)
    }
}

pub fn now_ms() -> Millis {
    SystemClock.now_ms()
}

/// Records a snapshot whenever the watched file's content differs from
/// the last one recorded.
pub struct Capture<C> {
    watched: PathBuf,
    store: SessionStore,
    clock: C,
    last_t: Option<Millis>,
    last_content: Option<String>,
    snapshots: usize,
}

impl<C: Clock> Capture<C> {
    /// `store` may already hold snapshots; capture continues after them.
    pub fn new(
        watched: &Path,
        store: SessionStore,
        existing: &[Snapshot],
        clock: C,
    ) -> Result<Self, CliError> {
        if !watched.is_file() {
            return Err(CliError::FileNotFound(watched.to_owned()));
        }
        let latest = existing.iter().max_by_key(|s| s.t);
        Ok(Capture {
            watched: watched.to_owned(),
            store,
            clock,
            last_t: latest.map(|s| s.t),
            last_content: latest.map(|s| s.content.clone()),
            snapshots: existing.len(),
        })
    }

    pub fn snapshot_count(&self) -> usize {
        self.snapshots
    }

    /// Read the watched file once. Returns whether a snapshot was stored.
    /// A file that is briefly missing (editors often save by replacing)
    /// is skipped rather than treated as an error.
    pub fn poll(&mut self) -> Result<bool, CliError> {
        let bytes = match fs::read(&self.watched) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                warn!("{} is missing; skipping this poll", self.watched.display());
                return Ok(false);
            }
            Err(e) => return Err(CliError::reading(&self.watched, e)),
        };
        let content = String::from_utf8_lossy(&bytes).into_owned();
        if self.last_content.as_deref() == Some(content.as_str()) {
            return Ok(false);
        }
        let mut t = self.clock.now_ms();
        if let Some(prev) = self.last_t {
            t = t.max(prev + 1);
        }
        self.store
            .append(Record::Snapshot(Snapshot::new(t, content.clone())))?;
        self.last_t = Some(t);
        self.last_content = Some(content);
        self.snapshots += 1;
        Ok(true)
    }

    /// Poll every `interval` until `stop` is set. Every stored snapshot is
    /// already on disk, so stopping loses at most one interval of edits.
    pub fn run(&mut self, interval: Duration, stop: &AtomicBool) -> Result<(), CliError> {
        const TICK: Duration = Duration::from_millis(50);
        while !stop.load(Ordering::SeqCst) {
            self.poll()?;
            let mut waited = Duration::ZERO;
            while waited < interval && !stop.load(Ordering::SeqCst) {
                let step = TICK.min(interval - waited);
                thread::sleep(step);
                waited += step;
            }
        }
        // One last look so edits made just before the interrupt are kept.
        self.poll()?;
        Ok(())
    }
}
