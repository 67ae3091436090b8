use serde::{Deserialize, Serialize};

/// Replace `source[begin..end]` with `replacement`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edit<T> {
    pub begin: usize,
    pub end: usize,
    pub replacement: Vec<T>,
}

/// Sorted, non-overlapping edits turning a source into a hypothesis.
pub type EditSet<T> = Vec<Edit<T>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    Match,
    Sub,
    Del,
    Ins,
}

fn distance_table<T: PartialEq>(source: &[T], target: &[T]) -> Vec<Vec<u32>> {
    let (m, n) = (source.len(), target.len());
    let mut d = vec![vec![0u32; n + 1]; m + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i as u32;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j as u32;
    }
    for i in 1..=m {
        for j in 1..=n {
            let diag = d[i - 1][j - 1] + u32::from(source[i - 1] != target[j - 1]);
            d[i][j] = diag.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d
}

/// Token-level Levenshtein distance (unit costs).
pub fn edit_distance<T: PartialEq>(source: &[T], target: &[T]) -> usize {
    if source == target {
        return 0;
    }
    // Two-row variant; the full table is only needed for alignment.
    let mut prev: Vec<usize> = (0..=target.len()).collect();
    let mut cur = vec![0; target.len() + 1];
    for (i, s) in source.iter().enumerate() {
        cur[0] = i + 1;
        for (j, t) in target.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(s != t))
                .min(prev[j + 1] + 1)
                .min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[target.len()]
}

/// Aligns `source` to `hypothesis` and merges adjacent non-match operations into span edits.
///
/// The backtrace runs from the end and prefers a match, then a substitution, then a
/// deletion, so that gaps land as far left as possible.
pub fn extract_edits<T: PartialEq + Clone>(source: &[T], hypothesis: &[T]) -> EditSet<T> {
    if source == hypothesis {
        return Vec::new();
    }
    let d = distance_table(source, hypothesis);
    let (mut i, mut j) = (source.len(), hypothesis.len());
    let mut ops = Vec::with_capacity(i.max(j));
    while i > 0 || j > 0 {
        let op =
            if i > 0 && j > 0 && source[i - 1] == hypothesis[j - 1] && d[i][j] == d[i - 1][j - 1] {
                Op::Match
            } else if i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + 1 {
                Op::Sub
            } else if i > 0 && d[i][j] == d[i - 1][j] + 1 {
                Op::Del
            } else {
                Op::Ins
            };
        match op {
            Op::Match | Op::Sub => {
                i -= 1;
                j -= 1;
            }
            Op::Del => i -= 1,
            Op::Ins => j -= 1,
        }
        ops.push(op);
    }
    ops.reverse();

    let mut edits = Vec::new();
    let mut current: Option<Edit<T>> = None;
    let (mut si, mut hj) = (0, 0);
    for op in ops {
        if op == Op::Match {
            edits.extend(current.take());
            si += 1;
            hj += 1;
            continue;
        }
        let edit = current.get_or_insert_with(|| Edit {
            begin: si,
            end: si,
            replacement: Vec::new(),
        });
        if matches!(op, Op::Sub | Op::Del) {
            si += 1;
            edit.end = si;
        }
        if matches!(op, Op::Sub | Op::Ins) {
            edit.replacement.push(hypothesis[hj].clone());
            hj += 1;
        }
    }
    edits.extend(current);
    edits
}

pub fn apply<T: Clone>(source: &[T], edits: &[Edit<T>]) -> Vec<T> {
    let mut out = Vec::with_capacity(source.len());
    let mut cursor = 0;
    for e in edits {
        out.extend_from_slice(&source[cursor..e.begin]);
        out.extend_from_slice(&e.replacement);
        cursor = e.end;
    }
    out.extend_from_slice(&source[cursor..]);
    out
}
