//! Tokens, vocabularies, parallel corpora and synthetic error injection.

mod corpus;
mod grammar;
mod inject;
mod lexicon;
mod tokenize;
mod vocab;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use corpus::{
    load_m2_gold, load_parallel_corpus, load_tsv_with_edits, read_lines, read_sentences, write_m2,
    write_sentences, write_tsv, write_tsv_with_edits, CorpusFormat, M2Sentence,
};
pub use grammar::{Grammar, GrammarConfig};
pub use inject::{inject_errors, Rule, RuleConfig};
pub use lexicon::Lexicon;
pub use tokenize::{tokenize, Tokenizer};
pub use vocab::{build_vocabulary, Vocabulary, BOS, EOS, PAD, UNK};

pub type TokenId = u32;

/// A sentence as a sequence of vocabulary ids.
pub type TokenSeq = Vec<TokenId>;

/// Error-type tags. The first seven are produced by the synthetic injection rules; anything
/// else read from an m2 file is kept verbatim in `Other`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum ErrorType {
    ArtOrDet,
    Sva,
    Nn,
    Vform,
    Prep,
    Wform,
    Wo,
    Other(String),
}

impl ErrorType {
    pub const SYNTHETIC: [ErrorType; 7] = [
        ErrorType::ArtOrDet,
        ErrorType::Sva,
        ErrorType::Nn,
        ErrorType::Vform,
        ErrorType::Prep,
        ErrorType::Wform,
        ErrorType::Wo,
    ];

    pub fn tag(&self) -> &str {
        match self {
            ErrorType::ArtOrDet => "ArtOrDet",
            ErrorType::Sva => "SVA",
            ErrorType::Nn => "Nn",
            ErrorType::Vform => "Vform",
            ErrorType::Prep => "Prep",
            ErrorType::Wform => "Wform",
            ErrorType::Wo => "WO",
            ErrorType::Other(s) => s,
        }
    }
}

impl From<String> for ErrorType {
    fn from(s: String) -> Self {
        match s.as_str() {
            "ArtOrDet" => ErrorType::ArtOrDet,
            "SVA" => ErrorType::Sva,
            "Nn" => ErrorType::Nn,
            "Vform" => ErrorType::Vform,
            "Prep" => ErrorType::Prep,
            "Wform" => ErrorType::Wform,
            "WO" => ErrorType::Wo,
            _ => ErrorType::Other(s),
        }
    }
}

impl From<ErrorType> for String {
    fn from(t: ErrorType) -> Self {
        t.tag().to_string()
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Replace `source[begin..end]` with `replacement` to move towards the target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledEdit<T = String> {
    pub begin: usize,
    pub end: usize,
    pub replacement: Vec<T>,
    pub kind: ErrorType,
}

/// A (source, target) pair. Token type is `String` at the text layer and [`TokenId`] once
/// encoded with a [`Vocabulary`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair<T = String> {
    pub source: Vec<T>,
    pub target: Vec<T>,
    pub edits: Option<Vec<LabeledEdit<T>>>,
}

impl<T: Clone> SentencePair<T> {
    pub fn new(source: Vec<T>, target: Vec<T>) -> Self {
        Self {
            source,
            target,
            edits: None,
        }
    }

    /// The same pair with source and target interchanged; edits are dropped since they
    /// are expressed against the original source.
    pub fn swapped(&self) -> Self {
        Self::new(self.target.clone(), self.source.clone())
    }
}

/// Applies sorted, non-overlapping span edits to `source`.
pub fn apply_edits<T: Clone>(source: &[T], edits: &[LabeledEdit<T>]) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(source.len());
    let mut cursor = 0;
    for e in edits {
        if e.begin < cursor || e.begin > e.end || e.end > source.len() {
            return Err(Error::InputMismatch(format!(
                "edit span {}..{} invalid for source of length {} (cursor {cursor})",
                e.begin,
                e.end,
                source.len()
            )));
        }
        out.extend_from_slice(&source[cursor..e.begin]);
        out.extend_from_slice(&e.replacement);
        cursor = e.end;
    }
    out.extend_from_slice(&source[cursor..]);
    Ok(out)
}

/// Self-copied pairs `(x, x)` from native sentences, order preserved.
pub fn self_copy_pairs<T: Clone>(native: &[Vec<T>]) -> Vec<SentencePair<T>> {
    native
        .iter()
        .map(|s| SentencePair {
            source: s.clone(),
            target: s.clone(),
            edits: Some(Vec::new()),
        })
        .collect()
}
