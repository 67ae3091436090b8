//! Beam search over one model or the probability-averaged ensemble of several.

use std::cmp::Ordering;

use super::model::{CorrectionModel, Encoded};
use super::{Corrector, Direction, Hypothesis};
use crate::textdata::{TokenId, BOS, EOS, PAD};
use crate::{Error, Result};

/// Models sharing a vocabulary and direction whose next-token distributions are averaged.
#[derive(Clone, Debug)]
pub struct Ensemble {
    members: Vec<CorrectionModel>,
}

impl Ensemble {
    pub fn new(members: Vec<CorrectionModel>) -> Result<Self> {
        let first = members.first().ok_or_else(|| {
            Error::EnsembleMismatch("an ensemble needs at least one model".into())
        })?;
        for m in &members[1..] {
            if m.direction() != first.direction() {
                return Err(Error::EnsembleMismatch(format!(
                    "members decode in different directions ({} and {})",
                    first.direction(),
                    m.direction()
                )));
            }
            if m.vocab_hash() != first.vocab_hash() || m.vocab_size() != first.vocab_size() {
                return Err(Error::EnsembleMismatch(
                    "members use different vocabularies".into(),
                ));
            }
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[CorrectionModel] {
        &self.members
    }
}

struct Live {
    tokens: Vec<TokenId>,
    log_prob: f64,
    states: Vec<Vec<Vec<f64>>>,
    next: Vec<f64>,
}

/// Per-member decoding state for one input.
struct Session<'a> {
    members: Vec<&'a CorrectionModel>,
    encoded: Vec<Encoded>,
}

impl<'a> Session<'a> {
    fn new(members: Vec<&'a CorrectionModel>, input: &[TokenId]) -> Self {
        let encoded = members.iter().map(|m| m.encode(input, None)).collect();
        Self { members, encoded }
    }

    fn initial(&self) -> Vec<Vec<Vec<f64>>> {
        self.encoded.iter().map(|e| e.init.clone()).collect()
    }

    /// Feeds `y_in`; returns the new states and the combined next-token log distribution.
    fn advance(&self, states: &[Vec<Vec<f64>>], y_in: TokenId) -> (Vec<Vec<Vec<f64>>>, Vec<f64>) {
        let mut new_states = Vec::with_capacity(self.members.len());
        let mut dists = Vec::with_capacity(self.members.len());
        for ((m, enc), st) in self.members.iter().zip(&self.encoded).zip(states) {
            let step = m.step(enc, st, y_in, None);
            new_states.push(step.layers.iter().map(|c| c.h.clone()).collect());
            dists.push(step.log_probs);
        }
        if dists.len() == 1 {
            return (new_states, dists.pop().unwrap());
        }
        let k = dists.len() as f64;
        let combined = (0..dists[0].len())
            .map(|w| (dists.iter().map(|d| d[w].exp()).sum::<f64>() / k).ln())
            .collect();
        (new_states, combined)
    }
}

pub(crate) fn beam_search(
    members: Vec<&CorrectionModel>,
    input: &[TokenId],
    beam: usize,
    n: usize,
    max_len: usize,
) -> Vec<Hypothesis> {
    let beam = beam.max(1);
    let max_len = max_len.max(1);
    let direction = members[0].direction();
    let session = Session::new(members, input);
    let (states, next) = session.advance(&session.initial(), BOS);
    let mut live = vec![Live {
        tokens: Vec::new(),
        log_prob: 0.0,
        states,
        next,
    }];
    let mut finished: Vec<Hypothesis> = Vec::new();
    while !live.is_empty() && finished.len() < beam {
        let mut cands: Vec<(f64, usize, TokenId)> = Vec::new();
        for (i, h) in live.iter().enumerate() {
            if h.tokens.len() >= max_len {
                cands.push((h.log_prob + h.next[EOS as usize], i, EOS));
                continue;
            }
            for (w, &lp) in h.next.iter().enumerate() {
                let w = w as TokenId;
                if w == PAD || w == BOS || (w == EOS && h.tokens.is_empty()) {
                    continue;
                }
                cands.push((h.log_prob + lp, i, w));
            }
        }
        let keep = beam - finished.len();
        cands.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        cands.truncate(keep);
        let mut next_live = Vec::with_capacity(keep);
        for (lp, i, w) in cands {
            let parent = &live[i];
            if w == EOS {
                finished.push(Hypothesis::finish(parent.tokens.clone(), lp, direction));
            } else {
                let mut tokens = parent.tokens.clone();
                tokens.push(w);
                let (states, next) = session.advance(&parent.states, w);
                next_live.push(Live {
                    tokens,
                    log_prob: lp,
                    states,
                    next,
                });
            }
        }
        live = next_live;
    }
    finished.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal));
    finished.truncate(n.max(1));
    finished
}

/// `ln P(output | input)` under the same combined distribution beam search uses.
pub(crate) fn score(members: Vec<&CorrectionModel>, input: &[TokenId], output: &[TokenId]) -> f64 {
    let target = members[0].oriented(output);
    let session = Session::new(members, input);
    let mut states = session.initial();
    let mut y_in = BOS;
    let mut total = 0.0;
    for &y in target.iter().chain([&EOS]) {
        let (s, dist) = session.advance(&states, y_in);
        total += dist[y as usize];
        states = s;
        y_in = y;
    }
    total
}

impl CorrectionModel {
    pub fn beam_search(
        &self,
        input: &[TokenId],
        beam: usize,
        n: usize,
        max_len: usize,
    ) -> Vec<Hypothesis> {
        beam_search(vec![self], input, beam, n, max_len)
    }

    pub fn greedy(&self, input: &[TokenId], max_len: usize) -> Vec<TokenId> {
        self.beam_search(input, 1, 1, max_len).remove(0).tokens
    }

    /// Next-token log distribution after `prefix` (decoder order), for inspection and tests.
    pub fn next_distribution(&self, input: &[TokenId], prefix: &[TokenId]) -> Vec<f64> {
        let session = Session::new(vec![self], input);
        let mut states = session.initial();
        let mut y_in = BOS;
        for &y in prefix {
            states = session.advance(&states, y_in).0;
            y_in = y;
        }
        session.advance(&states, y_in).1
    }
}

impl Corrector for CorrectionModel {
    fn direction(&self) -> Direction {
        self.config.direction
    }

    fn nbest(&self, input: &[TokenId], beam: usize, n: usize, max_len: usize) -> Vec<Hypothesis> {
        beam_search(vec![self], input, beam, n, max_len)
    }

    fn score(&self, input: &[TokenId], output: &[TokenId]) -> f64 {
        score(vec![self], input, output)
    }
}

impl Corrector for Ensemble {
    fn direction(&self) -> Direction {
        self.members[0].direction()
    }

    fn nbest(&self, input: &[TokenId], beam: usize, n: usize, max_len: usize) -> Vec<Hypothesis> {
        beam_search(self.members.iter().collect(), input, beam, n, max_len)
    }

    fn score(&self, input: &[TokenId], output: &[TokenId]) -> f64 {
        score(self.members.iter().collect(), input, output)
    }
}
