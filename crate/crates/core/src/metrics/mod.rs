//! Edit extraction, MaxMatch-style P/R/F0.5, GLEU and per-error-type recall.

mod edits;
mod gleu;
mod m2;
mod report;

pub use edits::{apply as apply_edit_set, edit_distance, extract_edits, Edit, EditSet};
pub use gleu::{gleu, GleuConfig};
pub use m2::{f_beta, m2_score, Counts, M2Score, ScoreTriple};
pub use report::{evaluate, per_type_recall, recall_table, EvaluationReport, TypeRecall};
