//! Attention encoder-decoder correction model.
//!
//! A bidirectional GRU encoder feeds a GRU decoder with dot-product attention. Models
//! decode left-to-right or right-to-left; right-to-left models train on reversed targets
//! and always return hypotheses in natural order.

mod decode;
mod gradcheck;
mod linalg;
mod model;
mod params;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::textdata::TokenId;
use crate::{Error, Result};

pub use decode::Ensemble;
pub use gradcheck::{grad_check, GradCheckReport, RELATIVE_ERROR_FLOOR};
pub use model::CorrectionModel;
pub use train::{evaluate_loss, train_epoch, Optimizer, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    L2R,
    R2L,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::L2R => "l2r",
            Direction::R2L => "r2l",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2r" => Ok(Direction::L2R),
            "r2l" => Ok(Direction::R2L),
            _ => Err(Error::config(format!(
                "unknown direction {s:?} (expected l2r or r2l)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub direction: Direction,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 32,
            hidden_dim: 64,
            encoder_layers: 1,
            decoder_layers: 1,
            direction: Direction::L2R,
            dropout: 0.2,
            seed: 1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0
            || self.hidden_dim == 0
            || self.encoder_layers == 0
            || self.decoder_layers == 0
        {
            return Err(Error::config(
                "model dimensions and depths must be at least 1",
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// A finished decoder output in natural order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub tokens: Vec<TokenId>,
    /// Sum of per-step log probabilities, EOS included.
    pub log_prob: f64,
    /// `log_prob / (len + 1)`, the beam ranking key.
    pub score: f64,
    pub complete: bool,
}

impl Hypothesis {
    pub(crate) fn finish(mut tokens: Vec<TokenId>, log_prob: f64, direction: Direction) -> Self {
        if direction == Direction::R2L {
            tokens.reverse();
        }
        let score = log_prob / (tokens.len() + 1) as f64;
        Self {
            tokens,
            log_prob,
            score,
            complete: true,
        }
    }
}

/// Anything that produces n-best corrections: a model, an ensemble or a test fixture.
pub trait Corrector: Send + Sync {
    fn direction(&self) -> Direction;

    /// Hypotheses sorted by `score` descending, in natural token order.
    fn nbest(&self, input: &[TokenId], beam: usize, n: usize, max_len: usize) -> Vec<Hypothesis>;

    /// `ln P(output | input)`, EOS included.
    fn score(&self, input: &[TokenId], output: &[TokenId]) -> f64;
}

/// Output length cap used when the caller has none: twice the input plus ten.
pub fn default_max_len(input_len: usize) -> usize {
    2 * input_len + 10
}
