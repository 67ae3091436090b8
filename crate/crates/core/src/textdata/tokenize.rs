use crate::{Error, Result};

/// Whitespace-and-punctuation tokenizer.
///
/// Runs of alphanumeric characters form words; an apostrophe or hyphen joins two
/// alphanumeric runs ("don't", "well-known"). Every other non-space character is a token
/// of its own.
#[derive(Clone, Copy, Debug, Default)]
pub struct Tokenizer {
    pub lowercase: bool,
}

impl Tokenizer {
    pub fn new(lowercase: bool) -> Self {
        Self { lowercase }
    }

    pub fn tokenize(&self, text: &str) -> Result<Vec<String>> {
        let chars: Vec<char> = text.chars().collect();
        let mut tokens = Vec::new();
        let mut word = String::new();
        for (i, &c) in chars.iter().enumerate() {
            let joiner = (c == '\'' || c == '-')
                && !word.is_empty()
                && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
            if c.is_alphanumeric() || joiner {
                word.push(c);
                continue;
            }
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
            if !c.is_whitespace() {
                tokens.push(c.to_string());
            }
        }
        if !word.is_empty() {
            tokens.push(word);
        }
        if tokens.is_empty() {
            return Err(Error::EmptyInput);
        }
        if self.lowercase {
            for t in &mut tokens {
                *t = t.to_lowercase();
            }
        }
        Ok(tokens)
    }
}

/// Tokenizes with the default (case-preserving) tokenizer.
pub fn tokenize(text: &str) -> Result<Vec<String>> {
    Tokenizer::default().tokenize(text)
}
