//! Shortest edit scripts between two unit sequences (Myers' O(ND) greedy
//! forward search), labelled as common, added and removed segments.

use serde::{Deserialize, Serialize};

/// One step of an edit script, by index into the two inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffOp {
    Equal { a: usize, b: usize },
    Delete { a: usize },
    Insert { b: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Common,
    Added,
    Removed,
}

impl Label {
    pub fn inverse(self) -> Label {
        match self {
            Label::Common => Label::Common,
            Label::Added => Label::Removed,
            Label::Removed => Label::Added,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffUnit {
    Line,
    Character,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub label: Label,
    pub units: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffScript {
    pub unit: DiffUnit,
    pub segments: Vec<Segment>,
}

impl DiffScript {
    fn units_where(&self, keep: impl Fn(Label) -> bool) -> Vec<&str> {
        self.segments
            .iter()
            .filter(|s| keep(s.label))
            .flat_map(|s| s.units.iter().map(String::as_str))
            .collect()
    }

    /// The first input, rebuilt from common and removed units.
    pub fn source_units(&self) -> Vec<&str> {
        self.units_where(|l| l != Label::Added)
    }

    /// The second input, rebuilt from common and added units.
    pub fn target_units(&self) -> Vec<&str> {
        self.units_where(|l| l != Label::Removed)
    }

    pub fn count(&self, label: Label) -> usize {
        self.segments
            .iter()
            .filter(|s| s.label == label)
            .map(|s| s.units.len())
            .sum()
    }

    /// Number of added plus removed units.
    pub fn edit_len(&self) -> usize {
        self.count(Label::Added) + self.count(Label::Removed)
    }

    pub fn is_unchanged(&self) -> bool {
        self.segments.iter().all(|s| s.label == Label::Common)
    }

    /// The script read in the opposite direction.
    pub fn inverted(&self) -> DiffScript {
        let mut segments: Vec<Segment> = Vec::with_capacity(self.segments.len());
        for seg in &self.segments {
            segments.push(Segment {
                label: seg.label.inverse(),
                units: seg.units.clone(),
            });
        }
        normalize_hunks(&mut segments);
        DiffScript {
            unit: self.unit,
            segments,
        }
    }
}

/// Minimal edit script from `a` to `b`.
///
/// Among equally short scripts the search consumes common units as early
/// as possible, and within a change hunk removals precede additions.
pub fn diff_ops<T: PartialEq>(a: &[T], b: &[T]) -> Vec<DiffOp> {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let suffix = a[prefix..]
        .iter()
        .rev()
        .zip(b[prefix..].iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    let (mid_a, mid_b) = (&a[prefix..a.len() - suffix], &b[prefix..b.len() - suffix]);

    let mut ops: Vec<DiffOp> = (0..prefix).map(|i| DiffOp::Equal { a: i, b: i }).collect();
    ops.extend(myers(mid_a, mid_b).into_iter().map(|op| match op {
        DiffOp::Equal { a, b } => DiffOp::Equal {
            a: a + prefix,
            b: b + prefix,
        },
        DiffOp::Delete { a } => DiffOp::Delete { a: a + prefix },
        DiffOp::Insert { b } => DiffOp::Insert { b: b + prefix },
    }));
    let (tail_a, tail_b) = (a.len() - suffix, b.len() - suffix);
    ops.extend((0..suffix).map(|i| DiffOp::Equal {
        a: tail_a + i,
        b: tail_b + i,
    }));
    ops
}

fn myers<T: PartialEq>(a: &[T], b: &[T]) -> Vec<DiffOp> {
    let (n, m) = (a.len() as isize, b.len() as isize);
    let max = n + m;
    if max == 0 {
        return Vec::new();
    }
    let offset = max as usize + 1;
    let mut v = vec![0isize; 2 * offset + 1];
    // trace[d] holds v[-d..=d] as it stood before round d.
    let mut trace: Vec<Vec<isize>> = Vec::new();
    let idx = |k: isize| (offset as isize + k) as usize;

    'search: for d in 0..=max {
        trace.push(v[idx(-d)..=idx(d)].to_vec());
        for k in (-d..=d).step_by(2) {
            let mut x = if k == -d || (k != d && v[idx(k - 1)] < v[idx(k + 1)]) {
                v[idx(k + 1)]
            } else {
                v[idx(k - 1)] + 1
            };
            let mut y = x - k;
            while x < n && y < m && a[x as usize] == b[y as usize] {
                x += 1;
                y += 1;
            }
            v[idx(k)] = x;
            if x >= n && y >= m {
                break 'search;
            }
        }
    }

    let mut ops = Vec::new();
    let (mut x, mut y) = (n, m);
    for d in (0..trace.len() as isize).rev() {
        let snap = &trace[d as usize];
        let at = |k: isize| snap[(k + d) as usize];
        let k = x - y;
        let (prev_x, prev_y) = if d == 0 {
            (0, 0)
        } else {
            let prev_k = if k == -d || (k != d && at(k - 1) < at(k + 1)) {
                k + 1
            } else {
                k - 1
            };
            let px = at(prev_k);
            (px, px - prev_k)
        };
        while x > prev_x && y > prev_y {
            x -= 1;
            y -= 1;
            ops.push(DiffOp::Equal {
                a: x as usize,
                b: y as usize,
            });
        }
        if d > 0 {
            if x == prev_x {
                ops.push(DiffOp::Insert { b: prev_y as usize });
            } else {
                ops.push(DiffOp::Delete { a: prev_x as usize });
            }
        }
        x = prev_x;
        y = prev_y;
    }
    ops.reverse();
    ops
}

fn push_unit(segments: &mut Vec<Segment>, label: Label, unit: String) {
    match segments.last_mut() {
        Some(seg) if seg.label == label => seg.units.push(unit),
        _ => segments.push(Segment {
            label,
            units: vec![unit],
        }),
    }
}

// Within each run of non-common segments, gather removals before additions.
fn normalize_hunks(segments: &mut Vec<Segment>) {
    let mut out: Vec<Segment> = Vec::with_capacity(segments.len());
    let mut removed: Vec<String> = Vec::new();
    let mut added: Vec<String> = Vec::new();
    let flush = |out: &mut Vec<Segment>, removed: &mut Vec<String>, added: &mut Vec<String>| {
        if !removed.is_empty() {
            out.push(Segment {
                label: Label::Removed,
                units: std::mem::take(removed),
            });
        }
        if !added.is_empty() {
            out.push(Segment {
                label: Label::Added,
                units: std::mem::take(added),
            });
        }
    };
    for seg in segments.drain(..) {
        match seg.label {
            Label::Removed => removed.extend(seg.units),
            Label::Added => added.extend(seg.units),
            Label::Common => {
                flush(&mut out, &mut removed, &mut added);
                match out.last_mut() {
                    Some(last) if last.label == Label::Common => last.units.extend(seg.units),
                    _ => out.push(seg),
                }
            }
        }
    }
    flush(&mut out, &mut removed, &mut added);
    *segments = out;
}

fn script_from_ops<T: ToString>(a: &[T], b: &[T], ops: &[DiffOp], unit: DiffUnit) -> DiffScript {
    let mut segments = Vec::new();
    for op in ops {
        match *op {
            DiffOp::Equal { a: i, .. } => push_unit(&mut segments, Label::Common, a[i].to_string()),
            DiffOp::Delete { a: i } => push_unit(&mut segments, Label::Removed, a[i].to_string()),
            DiffOp::Insert { b: j } => push_unit(&mut segments, Label::Added, b[j].to_string()),
        }
    }
    normalize_hunks(&mut segments);
    DiffScript { unit, segments }
}

/// Diff two sequences of textual units.
pub fn diff<S: AsRef<str>>(a: &[S], b: &[S], unit: DiffUnit) -> DiffScript {
    let a: Vec<&str> = a.iter().map(AsRef::as_ref).collect();
    let b: Vec<&str> = b.iter().map(AsRef::as_ref).collect();
    let ops = diff_ops(&a, &b);
    script_from_ops(&a, &b, &ops, unit)
}

pub fn diff_chars(a: &str, b: &str) -> DiffScript {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let ops = diff_ops(&a, &b);
    script_from_ops(&a, &b, &ops, DiffUnit::Character)
}

/// Line diff; units are the newline-separated lines, blank lines included.
pub fn diff_lines(a: &str, b: &str) -> DiffScript {
    let a: Vec<&str> = a.split('\n').collect();
    let b: Vec<&str> = b.split('\n').collect();
    diff(&a, &b, DiffUnit::Line)
}

/// Characters added and removed going from `a` to `b`.
pub fn added_removed_counts(a: &str, b: &str) -> (usize, usize) {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    diff_ops(&a, &b)
        .iter()
        .fold((0, 0), |(add, rem), op| match op {
            DiffOp::Equal { .. } => (add, rem),
            DiffOp::Delete { .. } => (add, rem + 1),
            DiffOp::Insert { .. } => (add + 1, rem),
        })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub kind: Label,
    pub text: String,
}

/// Merged rendering of one editing step: dropping removed spans yields
/// `curr`, dropping added spans yields `prev`.
pub fn playback_frame(prev: &str, curr: &str) -> Vec<Span> {
    diff_chars(prev, curr)
        .segments
        .into_iter()
        .map(|seg| Span {
            kind: seg.label,
            text: seg.units.concat(),
        })
        .collect()
}
