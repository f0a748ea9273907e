//! Plaintext session file format.
//!
//! ```text
//! pfsession 1
//! kind code
//! interval-ms 5000
//! snap 1700000000000 11
//! print("hi")
//! exec 1700000004000 err 17
//! NameError: prnt
//! exec 1700000009000 ok
//! ```
//!
//! Every payload is length-prefixed in bytes and followed by one `\n`, so
//! content needs no escaping. Records may be interleaved; capture appends
//! them as they happen. A file the parser accepts re-serializes to exactly
//! the same bytes.

use thiserror::Error;

use crate::history::{ExecutionEvent, Millis, RawHistory, RevisionHistory, SessionKind, Snapshot};

pub const MAGIC_LINE: &str = "pfsession 1";

/// One record in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Record {
    Snapshot(Snapshot),
    Execution(ExecutionEvent),
}

/// A parsed session file, preserving record order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionFile {
    pub kind: SessionKind,
    pub capture_interval_ms: u64,
    pub records: Vec<Record>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("malformed session at byte {offset}: {reason}")]
pub struct ParseError {
    pub offset: usize,
    pub reason: String,
}

impl SessionFile {
    pub fn new(kind: SessionKind, capture_interval_ms: u64) -> Self {
        SessionFile {
            kind,
            capture_interval_ms,
            records: Vec::new(),
        }
    }

    /// Snapshots first, then executions.
    pub fn from_history(h: &RevisionHistory) -> Self {
        let records = h
            .snapshots()
            .iter()
            .cloned()
            .map(Record::Snapshot)
            .chain(h.executions().iter().cloned().map(Record::Execution))
            .collect();
        SessionFile {
            kind: h.kind(),
            capture_interval_ms: h.capture_interval_ms(),
            records,
        }
    }

    pub fn into_raw(self) -> RawHistory {
        let mut snapshots = Vec::new();
        let mut executions = Vec::new();
        for r in self.records {
            match r {
                Record::Snapshot(s) => snapshots.push(s),
                Record::Execution(e) => executions.push(e),
            }
        }
        RawHistory {
            kind: self.kind,
            capture_interval_ms: self.capture_interval_ms,
            snapshots,
            executions,
        }
    }

    pub fn header_bytes(&self) -> Vec<u8> {
        format!(
            "{MAGIC_LINE}\nkind {}\ninterval-ms {}\n",
            self.kind, self.capture_interval_ms
        )
        .into_bytes()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.header_bytes();
        for r in &self.records {
            write_record(&mut out, r);
        }
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, ParseError> {
        let mut cur = Cursor { bytes, pos: 0 };
        let magic = cur.line()?;
        if magic != MAGIC_LINE {
            return Err(cur.err_at(0, "missing `pfsession 1` marker"));
        }
        let kind = cur
            .keyed_line("kind")?
            .parse::<SessionKind>()
            .map_err(|e| cur.err(e))?;
        let interval = cur.keyed_line("interval-ms")?;
        let capture_interval_ms = parse_uint(interval).ok_or_else(|| cur.err("bad interval"))?;

        let mut records = Vec::new();
        while !cur.at_end() {
            let start = cur.pos;
            let line = cur.line()?;
            let fields: Vec<&str> = line.split(' ').collect();
            let record = match fields.as_slice() {
                ["snap", t, len] => {
                    let t = parse_time(t).ok_or_else(|| cur.err_at(start, "bad timestamp"))?;
                    let len = parse_uint(len).ok_or_else(|| cur.err_at(start, "bad length"))?;
                    let content = cur.payload(len as usize)?;
                    Record::Snapshot(Snapshot { t, content })
                }
                ["exec", t, status, rest @ ..] if rest.len() <= 1 => {
                    let t = parse_time(t).ok_or_else(|| cur.err_at(start, "bad timestamp"))?;
                    let success = match *status {
                        "ok" => true,
                        "err" => false,
                        _ => return Err(cur.err_at(start, "execution status must be ok or err")),
                    };
                    let detail = match rest.first() {
                        Some(len) => {
                            let len =
                                parse_uint(len).ok_or_else(|| cur.err_at(start, "bad length"))?;
                            Some(cur.payload(len as usize)?)
                        }
                        None => None,
                    };
                    Record::Execution(ExecutionEvent { t, success, detail })
                }
                _ => return Err(cur.err_at(start, format!("unrecognized record `{line}`"))),
            };
            records.push(record);
        }
        Ok(SessionFile {
            kind,
            capture_interval_ms,
            records,
        })
    }
}

/// Serialized form of a single record, suitable for appending to a file.
pub fn record_bytes(r: &Record) -> Vec<u8> {
    let mut out = Vec::new();
    write_record(&mut out, r);
    out
}

fn write_record(out: &mut Vec<u8>, r: &Record) {
    match r {
        Record::Snapshot(s) => {
            out.extend_from_slice(format!("snap {} {}\n", s.t, s.content.len()).as_bytes());
            out.extend_from_slice(s.content.as_bytes());
            out.push(b'\n');
        }
        Record::Execution(e) => {
            let status = if e.success { "ok" } else { "err" };
            match &e.detail {
                Some(d) => {
                    out.extend_from_slice(
                        format!("exec {} {status} {}\n", e.t, d.len()).as_bytes(),
                    );
                    out.extend_from_slice(d.as_bytes());
                    out.push(b'\n');
                }
                None => out.extend_from_slice(format!("exec {} {status}\n", e.t).as_bytes()),
            }
        }
    }
}

// Canonical integers only: no sign on unsigned values, no leading zeros.
fn parse_uint(s: &str) -> Option<u64> {
    if s.is_empty() || (s.len() > 1 && s.starts_with('0')) || !s.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    s.parse().ok()
}

fn parse_time(s: &str) -> Option<Millis> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits == "0" && digits.len() != s.len() {
        return None;
    }
    parse_uint(digits)?;
    s.parse().ok()
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn err(&self, reason: impl Into<String>) -> ParseError {
        self.err_at(self.pos, reason)
    }

    fn err_at(&self, offset: usize, reason: impl Into<String>) -> ParseError {
        ParseError {
            offset,
            reason: reason.into(),
        }
    }

    fn line(&mut self) -> Result<&'a str, ParseError> {
        let rest = &self.bytes[self.pos..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| self.err("unterminated line"))?;
        let line = std::str::from_utf8(&rest[..nl]).map_err(|_| self.err("invalid UTF-8"))?;
        self.pos += nl + 1;
        Ok(line)
    }

    fn keyed_line(&mut self, key: &str) -> Result<&'a str, ParseError> {
        let start = self.pos;
        let line = self.line()?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| self.err_at(start, format!("expected `{key}` line")))
    }

    fn payload(&mut self, len: usize) -> Result<String, ParseError> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e < self.bytes.len())
            .ok_or_else(|| self.err("payload runs past end of file"))?;
        if self.bytes[end] != b'\n' {
            return Err(self.err_at(end, "payload not followed by newline"));
        }
        let text = std::str::from_utf8(&self.bytes[self.pos..end])
            .map_err(|_| self.err("payload is not valid UTF-8"))?
            .to_owned();
        self.pos = end + 1;
        Ok(text)
    }
}
