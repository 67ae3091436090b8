use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::edits::{extract_edits, Edit};

/// Edit-level counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    fn add(self, o: Counts) -> Counts {
        Counts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

/// Precision, recall and F-beta, all in percent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
}

impl ScoreTriple {
    pub fn from_counts(c: Counts, beta: f64) -> Self {
        let precision = if c.tp + c.fp == 0 {
            100.0
        } else {
            100.0 * c.tp as f64 / (c.tp + c.fp) as f64
        };
        let recall = if c.tp + c.fn_ == 0 {
            100.0
        } else {
            100.0 * c.tp as f64 / (c.tp + c.fn_) as f64
        };
        ScoreTriple {
            precision,
            recall,
            f_beta: f_beta(precision, recall, beta),
        }
    }
}

/// `(1+β²)·P·R / (β²·P + R)`, zero when both are zero.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct M2Score {
    pub scores: ScoreTriple,
    pub counts: Counts,
    /// Index of the annotator chosen for each sentence.
    pub chosen: Vec<usize>,
}

pub(crate) fn match_counts<T: PartialEq>(system: &[Edit<T>], gold: &[Edit<T>]) -> Counts {
    let tp = system.iter().filter(|e| gold.contains(e)).count();
    Counts {
        tp,
        fp: system.len() - tp,
        fn_: gold.len() - tp,
    }
}

/// MaxMatch-style scoring with exact (span, replacement) matching of system edits against
/// gold edits. With several annotators per sentence, the one that maximizes the running
/// corpus F-beta is chosen (ties: more true positives, then fewer errors, then lower index).
pub fn m2_score<T: PartialEq + Clone>(
    sources: &[Vec<T>],
    hypotheses: &[Vec<T>],
    gold: &[Vec<Vec<Edit<T>>>],
    beta: f64,
) -> Result<M2Score> {
    if sources.len() != hypotheses.len() || sources.len() != gold.len() {
        return Err(Error::InputMismatch(format!(
            "{} sources, {} hypotheses, {} gold annotations",
            sources.len(),
            hypotheses.len(),
            gold.len()
        )));
    }
    let mut total = Counts::default();
    let mut chosen = Vec::with_capacity(sources.len());
    for ((src, hyp), annotators) in sources.iter().zip(hypotheses).zip(gold) {
        let system = extract_edits(src, hyp);
        let no_annotation = [Vec::new()];
        let annotators: &[Vec<Edit<T>>] = if annotators.is_empty() {
            &no_annotation
        } else {
            annotators
        };
        let mut best: Option<(usize, Counts, f64)> = None;
        for (a, edits) in annotators.iter().enumerate() {
            let c = match_counts(&system, edits);
            let f = ScoreTriple::from_counts(total.add(c), beta).f_beta;
            let better = match best {
                None => true,
                Some((_, bc, bf)) => {
                    f > bf
                        || (f == bf
                            && (c.tp > bc.tp || (c.tp == bc.tp && c.fp + c.fn_ < bc.fp + bc.fn_)))
                }
            };
            if better {
                best = Some((a, c, f));
            }
        }
        let (a, c, _) = best.expect("at least one annotator");
        total = total.add(c);
        chosen.push(a);
    }
    Ok(M2Score {
        scores: ScoreTriple::from_counts(total, beta),
        counts: total,
        chosen,
    })
}
