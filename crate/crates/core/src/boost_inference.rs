//! Fluency boost inference: n-best re-ranking, multi-round correction that continues only
//! while fluency strictly improves, and round-way (right-to-left then left-to-right) correction.

use serde::{Deserialize, Serialize};

use crate::metrics::{edit_distance, evaluate};
use crate::ngram_lm::NGramModel;
use crate::seq2seq::{default_max_len, Corrector, Direction, Hypothesis};
use crate::textdata::{SentencePair, TokenId, TokenSeq};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RerankWeights {
    /// Length-normalized model log probability.
    pub model: f64,
    /// LM fluency of the hypothesis.
    pub fluency: f64,
    /// Token edit distance from the source (subtracted).
    pub edits: f64,
}

impl Default for RerankWeights {
    fn default() -> Self {
        Self {
            model: 1.0,
            fluency: 1.0,
            edits: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundWayOrder {
    #[default]
    R2lThenL2r,
    L2rThenR2l,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceConfig {
    pub nbest: usize,
    /// Raised to `nbest` if smaller.
    pub beam: usize,
    pub max_rounds: usize,
    /// Output length cap; `None` uses twice the input length plus ten.
    pub max_len: Option<usize>,
    pub weights: RerankWeights,
    /// Accept each round-way stage only if it improves fluency.
    pub guarded_round_way: bool,
    pub round_way_order: RoundWayOrder,
    /// Run each round-way stage as multi-round inference.
    pub multi_round_stages: bool,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            nbest: 12,
            beam: 12,
            max_rounds: 5,
            max_len: None,
            weights: RerankWeights::default(),
            guarded_round_way: true,
            round_way_order: RoundWayOrder::default(),
            multi_round_stages: false,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_rounds == 0 || self.nbest == 0 {
            return Err(Error::config("max_rounds and nbest must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Single,
    Multi,
    R2l,
    L2r,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub round: usize,
    pub stage: Stage,
    pub input: TokenSeq,
    pub output: TokenSeq,
    pub f_before: f64,
    pub f_after: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrectionTrace {
    pub steps: Vec<TraceStep>,
}

impl CorrectionTrace {
    pub fn accepted_rounds(&self) -> usize {
        self.steps.iter().filter(|s| s.accepted).count()
    }
}

fn fluency(lm: &NGramModel, x: &[TokenId]) -> f64 {
    lm.fluency(x).map(|s| s.f).unwrap_or(0.0)
}

/// Index of the best hypothesis under the weighted score; the earliest wins ties.
pub fn rerank_index(
    nbest: &[Hypothesis],
    source: &[TokenId],
    lm: &NGramModel,
    w: &RerankWeights,
) -> Result<usize> {
    if nbest.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (i, h) in nbest.iter().enumerate() {
        let mut s = w.model * h.score;
        if w.fluency != 0.0 {
            s += w.fluency * fluency(lm, &h.tokens);
        }
        if w.edits != 0.0 {
            s -= w.edits * edit_distance(source, &h.tokens) as f64;
        }
        if s > best.1 {
            best = (i, s);
        }
    }
    Ok(best.0)
}

pub fn rerank(
    nbest: &[Hypothesis],
    source: &[TokenId],
    lm: &NGramModel,
    w: &RerankWeights,
) -> Result<TokenSeq> {
    Ok(nbest[rerank_index(nbest, source, lm, w)?].tokens.clone())
}

/// n-best decoding followed by re-ranking. Empty input comes back unchanged.
pub fn correct_single(
    model: &dyn Corrector,
    x: &[TokenId],
    cfg: &InferenceConfig,
    lm: &NGramModel,
) -> TokenSeq {
    if x.is_empty() {
        return Vec::new();
    }
    let max_len = cfg.max_len.unwrap_or_else(|| default_max_len(x.len()));
    let nbest = model.nbest(x, cfg.beam.max(cfg.nbest), cfg.nbest, max_len);
    rerank(&nbest, x, lm, &cfg.weights).unwrap_or_else(|_| x.to_vec())
}

fn multi_round_into(
    model: &dyn Corrector,
    x: &[TokenId],
    cfg: &InferenceConfig,
    lm: &NGramModel,
    stage: Stage,
    trace: &mut CorrectionTrace,
) -> TokenSeq {
    let mut current = x.to_vec();
    let mut f_current = fluency(lm, &current);
    for round in 1..=cfg.max_rounds {
        let out = correct_single(model, &current, cfg, lm);
        let f_out = fluency(lm, &out);
        let accepted = f_out > f_current;
        trace.steps.push(TraceStep {
            round,
            stage,
            input: current.clone(),
            output: out.clone(),
            f_before: f_current,
            f_after: f_out,
            accepted,
        });
        if !accepted {
            break;
        }
        current = out;
        f_current = f_out;
    }
    current
}

/// Repeats single-round correction while fluency strictly improves, up to `max_rounds`.
pub fn correct_multi_round(
    model: &dyn Corrector,
    x: &[TokenId],
    cfg: &InferenceConfig,
    lm: &NGramModel,
) -> (TokenSeq, CorrectionTrace) {
    let mut trace = CorrectionTrace::default();
    let out = multi_round_into(model, x, cfg, lm, Stage::Multi, &mut trace);
    (out, trace)
}

fn stage(
    model: &dyn Corrector,
    x: &[TokenId],
    cfg: &InferenceConfig,
    lm: &NGramModel,
    tag: Stage,
    trace: &mut CorrectionTrace,
) -> TokenSeq {
    if cfg.multi_round_stages {
        return multi_round_into(model, x, cfg, lm, tag, trace);
    }
    let f_before = fluency(lm, x);
    let out = correct_single(model, x, cfg, lm);
    let f_after = fluency(lm, &out);
    let accepted = !cfg.guarded_round_way || f_after > f_before;
    trace.steps.push(TraceStep {
        round: 1,
        stage: tag,
        input: x.to_vec(),
        output: out.clone(),
        f_before,
        f_after,
        accepted,
    });
    if accepted {
        out
    } else {
        x.to_vec()
    }
}

/// Right-to-left correction followed by left-to-right correction (or the reverse order
/// when configured), each stage guarded by the fluency check unless disabled.
pub fn correct_round_way(
    r2l: &dyn Corrector,
    l2r: &dyn Corrector,
    x: &[TokenId],
    cfg: &InferenceConfig,
    lm: &NGramModel,
) -> Result<(TokenSeq, CorrectionTrace)> {
    if r2l.direction() != Direction::R2L {
        return Err(Error::Direction(
            "first round-way model must decode right-to-left".into(),
        ));
    }
    if l2r.direction() != Direction::L2R {
        return Err(Error::Direction(
            "second round-way model must decode left-to-right".into(),
        ));
    }
    let mut trace = CorrectionTrace::default();
    let out = match cfg.round_way_order {
        RoundWayOrder::R2lThenL2r => {
            let mid = stage(r2l, x, cfg, lm, Stage::R2l, &mut trace);
            stage(l2r, &mid, cfg, lm, Stage::L2r, &mut trace)
        }
        RoundWayOrder::L2rThenR2l => {
            let mid = stage(l2r, x, cfg, lm, Stage::L2r, &mut trace);
            stage(r2l, &mid, cfg, lm, Stage::R2l, &mut trace)
        }
    };
    Ok((out, trace))
}

/// Grid search over re-rank weights maximizing corpus F0.5 of single-round correction.
pub fn tune_weights(
    model: &dyn Corrector,
    dev: &[SentencePair<TokenId>],
    lm: &NGramModel,
    cfg: &InferenceConfig,
    grid: &[RerankWeights],
) -> Result<(RerankWeights, f64)> {
    if dev.is_empty() || grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    let max_len = |x: &[TokenId]| cfg.max_len.unwrap_or_else(|| default_max_len(x.len()));
    let nbests: Vec<Vec<Hypothesis>> = dev
        .iter()
        .map(|p| {
            model.nbest(
                &p.source,
                cfg.beam.max(cfg.nbest),
                cfg.nbest,
                max_len(&p.source),
            )
        })
        .collect();
    let mut best: Option<(RerankWeights, f64)> = None;
    for w in grid {
        let hyps = dev
            .iter()
            .zip(&nbests)
            .map(|(p, nb)| rerank(nb, &p.source, lm, w))
            .collect::<Result<Vec<_>>>()?;
        let f = evaluate(dev, &hyps)?.scores.f_beta;
        if best.is_none_or(|(_, b)| f > b) {
            best = Some((*w, f));
        }
    }
    Ok(best.expect("grid is non-empty"))
}
