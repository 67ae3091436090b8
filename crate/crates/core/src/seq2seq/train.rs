//! Token-batched Nesterov-momentum training.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::linalg::norm_sq;
use super::model::{CorrectionModel, Dropout};
use crate::seed::Rng;
use crate::textdata::SentencePair;
use crate::textdata::TokenId;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    /// Target tokens (EOS included) per mini-batch.
    pub batch_tokens: usize,
    /// Global gradient-norm clip; 0 disables.
    pub clip_norm: f64,
    /// Factor applied to the learning rate when the dev loss stops improving.
    pub lr_decay: f64,
    pub min_learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            momentum: 0.99,
            batch_tokens: 256,
            clip_norm: 5.0,
            lr_decay: 0.5,
            min_learning_rate: 1e-4,
        }
    }
}

impl TrainConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0)
            || !(0.0..1.0).contains(&self.momentum)
            || self.batch_tokens == 0
        {
            return Err(Error::config(format!("invalid training config {self:?}")));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) || self.clip_norm < 0.0 {
            return Err(Error::config(format!("invalid training config {self:?}")));
        }
        Ok(())
    }
}

/// Nesterov momentum in the form `v = μv + g; θ -= lr (g + μv)`, plus the plateau schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimizer {
    pub config: TrainConfig,
    pub learning_rate: f64,
    velocity: Vec<f64>,
    best_dev: Option<f64>,
}

impl Optimizer {
    pub fn new(config: TrainConfig, model: &CorrectionModel) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            learning_rate: config.learning_rate,
            velocity: vec![0.0; model.num_params()],
            config,
            best_dev: None,
        })
    }

    fn step(&mut self, params: &mut [f64], grad: &mut [f64]) {
        let c = &self.config;
        if c.clip_norm > 0.0 {
            let norm = norm_sq(grad).sqrt();
            if norm > c.clip_norm {
                let scale = c.clip_norm / norm;
                grad.iter_mut().for_each(|g| *g *= scale);
            }
        }
        let (mu, lr) = (c.momentum, self.learning_rate);
        for ((p, v), g) in params.iter_mut().zip(&mut self.velocity).zip(grad.iter()) {
            *v = mu * *v + g;
            *p -= lr * (g + mu * *v);
        }
    }

    /// Records a dev loss; decays the learning rate when it did not improve.
    /// Returns false once the learning rate has fallen below its floor.
    pub fn observe_dev_loss(&mut self, loss: f64) -> bool {
        match self.best_dev {
            Some(best) if loss >= best => {
                self.learning_rate *= self.config.lr_decay;
                log::debug!("dev loss plateau, learning rate now {}", self.learning_rate);
            }
            _ => self.best_dev = Some(loss),
        }
        self.learning_rate >= self.config.min_learning_rate
    }
}

fn check_pairs(model: &CorrectionModel, pairs: &[SentencePair<TokenId>]) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let v = model.vocab_size() as TokenId;
    for (i, p) in pairs.iter().enumerate() {
        if p.source.iter().chain(&p.target).any(|&t| t >= v) {
            return Err(Error::InputMismatch(format!(
                "pair {i} has a token outside the vocabulary"
            )));
        }
    }
    Ok(())
}

/// One pass over `pairs` in an RNG-shuffled order. Returns the mean per-token NLL.
pub fn train_epoch(
    model: &mut CorrectionModel,
    pairs: &[SentencePair<TokenId>],
    opt: &mut Optimizer,
    rng: &mut Rng,
) -> Result<f64> {
    check_pairs(model, pairs)?;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(rng);
    let targets: Vec<Vec<TokenId>> = pairs.iter().map(|p| model.oriented(&p.target)).collect();
    let rate = model.config.dropout;
    let mut grad = vec![0.0; model.num_params()];
    let (mut total_loss, mut total_tokens) = (0.0, 0usize);
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        let mut tokens = 0;
        while end < order.len()
            && (end == start || tokens + targets[order[end]].len() < opt.config.batch_tokens)
        {
            tokens += targets[order[end]].len() + 1;
            end += 1;
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut batch_loss = 0.0;
        for &i in &order[start..end] {
            let mut drop = Dropout {
                rate,
                rng: &mut *rng,
            };
            let dropout = (rate > 0.0).then_some(&mut drop);
            batch_loss += model.pair_loss(&pairs[i].source, &targets[i], Some(&mut grad), dropout);
        }
        if !batch_loss.is_finite() {
            return Err(Error::DivergedTraining { loss: batch_loss });
        }
        let scale = 1.0 / tokens as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        opt.step(&mut model.params, &mut grad);
        model.steps += 1;
        total_loss += batch_loss;
        total_tokens += tokens;
        start = end;
    }
    if model.params.iter().any(|p| !p.is_finite()) {
        return Err(Error::DivergedTraining { loss: f64::NAN });
    }
    Ok(total_loss / total_tokens as f64)
}

/// Mean per-token NLL without dropout.
pub fn evaluate_loss(model: &CorrectionModel, pairs: &[SentencePair<TokenId>]) -> Result<f64> {
    check_pairs(model, pairs)?;
    let (mut loss, mut tokens) = (0.0, 0usize);
    for p in pairs {
        loss += model.pair_loss(&p.source, &model.oriented(&p.target), None, None);
        tokens += p.target.len() + 1;
    }
    Ok(loss / tokens as f64)
}
