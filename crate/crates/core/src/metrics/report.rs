use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::textdata::{ErrorType, LabeledEdit, SentencePair};
use crate::Result;

use super::edits::{extract_edits, Edit};
use super::gleu::{gleu, GleuConfig};
use super::m2::{m2_score, Counts, ScoreTriple};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeRecall {
    pub total: usize,
    pub recalled: usize,
    /// Percent.
    pub recall: f64,
}

/// Recall of gold edits per error type: a gold edit counts as recalled iff the system
/// produced exactly the same edit.
pub fn per_type_recall<T: PartialEq + Clone>(
    pairs: &[SentencePair<T>],
    hypotheses: &[Vec<T>],
) -> BTreeMap<ErrorType, TypeRecall> {
    let mut map: BTreeMap<ErrorType, TypeRecall> = BTreeMap::new();
    for (pair, hyp) in pairs.iter().zip(hypotheses) {
        let system = extract_edits(&pair.source, hyp);
        for g in pair.edits.as_deref().unwrap_or(&[]) {
            let entry = map.entry(g.kind.clone()).or_default();
            entry.total += 1;
            if system.contains(&unlabeled(g)) {
                entry.recalled += 1;
            }
        }
    }
    for r in map.values_mut() {
        r.recall = 100.0 * r.recalled as f64 / r.total as f64;
    }
    map
}

pub(crate) fn unlabeled<T: Clone>(e: &LabeledEdit<T>) -> Edit<T> {
    Edit {
        begin: e.begin,
        end: e.end,
        replacement: e.replacement.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub sentences: usize,
    pub scores: ScoreTriple,
    pub counts: Counts,
    pub gleu: f64,
    pub per_type: BTreeMap<String, TypeRecall>,
}

/// Scores hypotheses against labeled single-reference pairs: M2 (β = 0.5) against the
/// pairs' edits, GLEU against the targets, and per-type recall.
///
/// Pairs without edits use the aligner's edits between source and target as gold.
pub fn evaluate<T: PartialEq + Clone + std::hash::Hash + Eq>(
    pairs: &[SentencePair<T>],
    hypotheses: &[Vec<T>],
) -> Result<EvaluationReport> {
    let sources: Vec<Vec<T>> = pairs.iter().map(|p| p.source.clone()).collect();
    let gold: Vec<Vec<Vec<Edit<T>>>> = pairs
        .iter()
        .map(|p| {
            vec![match &p.edits {
                Some(edits) => edits.iter().map(unlabeled).collect(),
                None => extract_edits(&p.source, &p.target),
            }]
        })
        .collect();
    let m2 = m2_score(&sources, hypotheses, &gold, 0.5)?;
    let references: Vec<Vec<Vec<T>>> = pairs.iter().map(|p| vec![p.target.clone()]).collect();
    let g = gleu(&sources, hypotheses, &references, &GleuConfig::default());
    let per_type = per_type_recall(pairs, hypotheses)
        .into_iter()
        .map(|(k, v)| (k.tag().to_string(), v))
        .collect();
    Ok(EvaluationReport {
        sentences: pairs.len(),
        scores: m2.scores,
        counts: m2.counts,
        gleu: g,
        per_type,
    })
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Aligned text table: overall scores, then one recall row per error type.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<12} {:>8} {:>8} {:>8} {:>8}",
            "", "P", "R", "F0.5", "GLEU"
        );
        let _ = writeln!(
            s,
            "{:<12} {:>8.2} {:>8.2} {:>8.2} {:>8.2}",
            "overall", self.scores.precision, self.scores.recall, self.scores.f_beta, self.gleu
        );
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<12} {:>8} {:>8} {:>8}",
            "Error type", "gold", "hit", "recall"
        );
        for (t, r) in &self.per_type {
            let _ = writeln!(
                s,
                "{:<12} {:>8} {:>8} {:>8.2}",
                t, r.total, r.recalled, r.recall
            );
        }
        s
    }
}

/// Side-by-side per-type recall of several systems, one column per system.
pub fn recall_table(columns: &[(&str, &EvaluationReport)]) -> String {
    let mut types: Vec<&String> = columns
        .iter()
        .flat_map(|(_, r)| r.per_type.keys())
        .collect();
    types.sort();
    types.dedup();
    let mut s = format!("{:<12}", "Error type");
    for (name, _) in columns {
        let _ = write!(s, " {name:>14}");
    }
    s.push('\n');
    for t in types {
        let _ = write!(s, "{t:<12}");
        for (_, r) in columns {
            match r.per_type.get(t) {
                Some(v) => {
                    let _ = write!(s, " {:>14.2}", v.recall);
                }
                None => {
                    let _ = write!(s, " {:>14}", "-");
                }
            }
        }
        s.push('\n');
    }
    let _ = write!(s, "{:<12}", "overall");
    for (_, r) in columns {
        let _ = write!(s, " {:>14.2}", r.scores.recall);
    }
    s.push('\n');
    s
}
