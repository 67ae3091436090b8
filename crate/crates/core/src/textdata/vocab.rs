use std::collections::HashMap;

use crate::seed::sha256_hex;
use crate::{Error, Result};

use super::{SentencePair, TokenId, TokenSeq};

pub const PAD: TokenId = 0;
pub const UNK: TokenId = 1;
pub const BOS: TokenId = 2;
pub const EOS: TokenId = 3;

const RESERVED: [&str; 4] = ["<pad>", "<unk>", "<s>", "</s>"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    to_id: HashMap<String, TokenId>,
    surfaces: Vec<String>,
}

impl Vocabulary {
    /// Builds a vocabulary from surfaces in id order (reserved ids are prepended).
    pub fn from_surfaces<I, S>(surfaces: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary {
            to_id: HashMap::new(),
            surfaces: Vec::new(),
        };
        for s in RESERVED
            .iter()
            .map(|s| s.to_string())
            .chain(surfaces.into_iter().map(Into::into))
        {
            if vocab.to_id.contains_key(&s) {
                return Err(Error::Format(format!("duplicate vocabulary entry {s:?}")));
            }
            vocab
                .to_id
                .insert(s.clone(), vocab.surfaces.len() as TokenId);
            vocab.surfaces.push(s);
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    /// Non-reserved surfaces in id order.
    pub fn words(&self) -> &[String] {
        &self.surfaces[RESERVED.len()..]
    }

    pub fn id(&self, surface: &str) -> TokenId {
        match self.to_id.get(surface) {
            Some(&id) if id as usize >= RESERVED.len() => id,
            _ => UNK,
        }
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.id(surface) != UNK
    }

    pub fn surface(&self, id: TokenId) -> &str {
        self.surfaces
            .get(id as usize)
            .map(String::as_str)
            .unwrap_or(RESERVED[UNK as usize])
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> TokenSeq {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter().map(|&i| self.surface(i).to_string()).collect()
    }

    pub fn decode_line(&self, ids: &[TokenId]) -> String {
        self.decode(ids).join(" ")
    }

    pub fn encode_pair(&self, pair: &SentencePair<String>) -> SentencePair<TokenId> {
        SentencePair {
            source: self.encode(&pair.source),
            target: self.encode(&pair.target),
            edits: pair.edits.as_ref().map(|edits| {
                edits
                    .iter()
                    .map(|e| super::LabeledEdit {
                        begin: e.begin,
                        end: e.end,
                        replacement: self.encode(&e.replacement),
                        kind: e.kind.clone(),
                    })
                    .collect()
            }),
        }
    }

    /// Content hash of the id assignment, stored in checkpoints.
    pub fn hash(&self) -> String {
        sha256_hex(self.surfaces.join("\n").as_bytes())
    }
}

/// Keeps the `max_size - 4` most frequent surfaces; ties go to the lexicographically
/// smaller surface.
pub fn build_vocabulary<S: AsRef<str>>(corpus: &[Vec<S>], max_size: usize) -> Result<Vocabulary> {
    if max_size < RESERVED.len() {
        return Err(Error::config(format!(
            "vocabulary max_size must be at least {}, got {max_size}",
            RESERVED.len()
        )));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for sentence in corpus {
        for t in sentence {
            let t = t.as_ref();
            if !RESERVED.contains(&t) {
                *counts.entry(t).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_size - RESERVED.len());
    Vocabulary::from_surfaces(ranked.into_iter().map(|(s, _)| s.to_string()))
}
