//! Synthetic revision histories for benchmarks.

use procviz_core::{validate_history, RawHistory, RevisionHistory, SessionKind, Snapshot};

const WORDS: &[&str] = &[
    "process",
    "feedback",
    "draft",
    "revision",
    "passage",
    "writer",
    "idea",
    "sentence",
    "structure",
    "argument",
    "evidence",
    "claim",
    "reader",
    "paragraph",
    "edit",
    "clarity",
];

/// Deterministic pseudo-random word stream (xorshift), so runs compare.
struct Words(u64);

impl Words {
    fn next(&mut self) -> &'static str {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        WORDS[(self.0 % WORDS.len() as u64) as usize]
    }
}

/// A document of about `paragraphs * 4` sentences.
pub fn document(paragraphs: usize, seed: u64) -> String {
    let mut w = Words(seed.max(1));
    let mut out = Vec::with_capacity(paragraphs);
    for _ in 0..paragraphs {
        let sentences: Vec<String> = (0..4)
            .map(|_| {
                let words: Vec<&str> = (0..10).map(|_| w.next()).collect();
                format!("{}.", words.join(" "))
            })
            .collect();
        out.push(sentences.join(" "));
    }
    out.join("\n\n")
}

/// A text session that grows by appending and occasionally rewrites an
/// earlier sentence, `steps` snapshots long.
pub fn growing_history(steps: usize) -> RevisionHistory {
    let mut w = Words(0x9E37_79B9);
    let mut content = String::new();
    let mut snapshots = Vec::with_capacity(steps);
    for i in 0..steps {
        if i % 7 == 6 {
            content = content.replacen("draft", "version", 1);
        } else if i % 12 == 11 {
            content.push_str("\n\n");
        } else {
            content.push_str(w.next());
            content.push_str(if i % 9 == 8 { ". " } else { " " });
        }
        snapshots.push(Snapshot::new(i as i64 * 5000, content.clone()));
    }
    validate_history(RawHistory {
        kind: SessionKind::Text,
        capture_interval_ms: 5000,
        snapshots,
        executions: Vec::new(),
    })
    .expect("synthetic history is valid")
    .history
}
