//! Running a command and recording its outcome as an execution event.

use std::io::{self, BufRead, BufReader, Write};
use std::process::{Command, ExitStatus, Stdio};
use std::thread;

use log::warn;
use procviz_core::session::Record;
use procviz_core::{ExecutionEvent, SessionKind};

use crate::capture::Clock;
use crate::error::CliError;
use crate::storage::SessionStore;

/// Longest error line kept in an event, in characters.
const DETAIL_MAX_CHARS: usize = 500;

pub struct Outcome {
    pub status: ExitStatus,
    pub event: ExecutionEvent,
}

/// Run `argv`, echoing its output, and append the result to the session.
/// Standard error is passed through line by line while its first non-blank
/// line is kept as the event detail.
pub fn run_and_record(
    store: &SessionStore,
    kind: SessionKind,
    argv: &[String],
    clock: &impl Clock,
) -> Result<Outcome, CliError> {
    let (program, args) = argv
        .split_first()
        .ok_or_else(|| CliError::Usage("no command given".into()))?;
    if kind == SessionKind::Text {
        warn!("session kind is text; execution events are ignored when analyzing text sessions");
    }
    let t = clock.now_ms();
    let mut child = match Command::new(program)
        .args(args)
        .stdin(Stdio::inherit())
        .stdout(Stdio::inherit())
        .stderr(Stdio::piped())
        .spawn()
    {
        Ok(c) => c,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Err(CliError::CommandNotFound(program.clone()))
        }
        Err(e) => return Err(CliError::io(format!("starting {program}"), e)),
    };
    let stderr = child.stderr.take().expect("stderr is piped");
    let tee = thread::spawn(move || {
        let mut first: Option<String> = None;
        let mut out = io::stderr();
        for line in BufReader::new(stderr).lines() {
            let Ok(line) = line else { break };
            let _ = writeln!(out, "{line}");
            if first.is_none() && !line.trim().is_empty() {
                first = Some(line.trim_end().chars().take(DETAIL_MAX_CHARS).collect());
            }
        }
        first
    });
    let status = child
        .wait()
        .map_err(|e| CliError::io(format!("waiting for {program}"), e))?;
    let detail = tee.join().unwrap_or(None);
    let event = ExecutionEvent {
        t,
        success: status.success(),
        detail,
    };
    store.append(Record::Execution(event.clone()))?;
    Ok(Outcome { status, event })
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;
    use crate::capture::SystemClock;
    use procviz_core::session::SessionFile;
    use std::fs;

    fn session() -> (tempfile::TempDir, std::path::PathBuf, SessionStore) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.pfs");
        let (store, _) =
            SessionStore::create_or_resume(&path, SessionKind::Code, 5000, None).unwrap();
        (dir, path, store)
    }

    fn events(path: &std::path::Path) -> Vec<ExecutionEvent> {
        SessionFile::parse(&fs::read(path).unwrap())
            .unwrap()
            .into_raw()
            .executions
    }

    fn sh(script: &str) -> Vec<String> {
        vec!["sh".into(), "-c".into(), script.into()]
    }

    #[test]
    fn success_and_failure() {
        let (_d, path, store) = session();
        let ok = run_and_record(&store, SessionKind::Code, &sh("exit 0"), &SystemClock).unwrap();
        assert!(ok.event.success);
        let bad = run_and_record(
            &store,
            SessionKind::Code,
            &sh("echo '' >&2; echo 'boom: x' >&2; echo more >&2; exit 1"),
            &SystemClock,
        )
        .unwrap();
        assert!(!bad.event.success);
        assert_eq!(bad.event.detail.as_deref(), Some("boom: x"));
        let ev = events(&path);
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[1], bad.event);
    }

    #[test]
    fn missing_command_records_nothing() {
        let (_d, path, store) = session();
        let err = run_and_record(
            &store,
            SessionKind::Code,
            &["procviz-no-such-command".into()],
            &SystemClock,
        );
        assert!(matches!(err, Err(CliError::CommandNotFound(_))));
        assert!(events(&path).is_empty());
    }
}
