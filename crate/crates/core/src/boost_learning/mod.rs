//! Fluency boost learning: disfluency candidates that are less fluent than their correct
//! counterpart by a ratio of at least σ, paired with it as extra training data.

mod runner;
mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::ngram_lm::NGramModel;
use crate::seed::Rng;
use crate::seq2seq::{default_max_len, Corrector};
use crate::textdata::{SentencePair, TokenId, TokenSeq};
use crate::{Error, Result};

pub use runner::{
    run_back_boost, run_base, run_boost, run_dual_boost, run_self_boost, BoostRun, EpochStats,
    ModelSetup,
};
pub use store::{read_candidate_log, sequence_hash, CandidateLog, CandidateRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Plain maximum-likelihood training on the original pairs.
    #[serde(alias = "none")]
    Base,
    Back,
    #[serde(rename = "self")]
    SelfBoost,
    Dual,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Base => "base",
            Strategy::Back => "back",
            Strategy::SelfBoost => "self",
            Strategy::Dual => "dual",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" | "none" => Ok(Strategy::Base),
            "back" => Ok(Strategy::Back),
            "self" => Ok(Strategy::SelfBoost),
            "dual" => Ok(Strategy::Dual),
            _ => Err(Error::config(format!(
                "unknown strategy {s:?} (base, back, self or dual)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostConfig {
    /// Minimum `f(x^c) / f(candidate)`.
    pub sigma: f64,
    /// Hypotheses kept from each n-best list.
    pub nbest: usize,
    /// Beam width used to produce the n-best list; raised to `nbest` if smaller.
    pub beam: usize,
    pub epochs: usize,
    /// Epochs for the back-boost generator; defaults to `epochs`.
    pub generator_epochs: Option<usize>,
    /// Let the corrector propose candidates for self-copied native pairs.
    pub native_self_candidates: bool,
    /// Let the generator propose candidates in dual mode.
    pub generator_candidates: bool,
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            sigma: 1.05,
            nbest: 10,
            beam: 10,
            epochs: 10,
            generator_epochs: None,
            native_self_candidates: true,
            generator_candidates: true,
            seed: 1,
        }
    }
}

impl BoostConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 1.0) {
            return Err(Error::config(format!(
                "sigma must exceed 1.0, got {}",
                self.sigma
            )));
        }
        if self.nbest == 0 {
            return Err(Error::config("nbest must be at least 1"));
        }
        Ok(())
    }

    fn beam_width(&self) -> usize {
        self.beam.max(self.nbest)
    }
}

/// `f(x_c) / f(candidate) ≥ σ`.
pub fn fluency_boost_condition(
    x_c: &[TokenId],
    candidate: &[TokenId],
    lm: &NGramModel,
    sigma: f64,
) -> Result<bool> {
    Ok(fluency_ratio(lm.fluency(x_c)?.f, candidate, lm)? >= sigma)
}

fn fluency_ratio(f_correct: f64, candidate: &[TokenId], lm: &NGramModel) -> Result<f64> {
    Ok(f_correct / lm.fluency(candidate)?.f)
}

/// Disfluency candidates of one correct sentence, each with its fluency ratio.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub members: BTreeMap<TokenSeq, f64>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, tokens: &[TokenId]) -> bool {
        self.members.contains_key(tokens)
    }

    fn pick(&self, rng: &mut Rng) -> Option<&TokenSeq> {
        if self.members.is_empty() {
            return None;
        }
        let i = rng.gen_range(0..self.members.len());
        self.members.keys().nth(i)
    }
}

/// Filters n-best outputs against one correct sentence.
struct Filter<'a> {
    lm: &'a NGramModel,
    sigma: f64,
    owner: &'a [TokenId],
    f_owner: f64,
}

impl<'a> Filter<'a> {
    fn new(lm: &'a NGramModel, sigma: f64, owner: &'a [TokenId]) -> Result<Self> {
        Ok(Self {
            lm,
            sigma,
            owner,
            f_owner: lm.fluency(owner)?.f,
        })
    }

    /// Adds qualifying hypotheses to `set`; returns the newly inserted ones.
    fn absorb(
        &self,
        outputs: Vec<TokenSeq>,
        set: &mut CandidateSet,
    ) -> Result<Vec<(TokenSeq, f64)>> {
        let mut added = Vec::new();
        for y in outputs {
            if y.is_empty() || y == self.owner || set.contains(&y) {
                continue;
            }
            let ratio = fluency_ratio(self.f_owner, &y, self.lm)?;
            if ratio >= self.sigma {
                set.members.insert(y.clone(), ratio);
                added.push((y, ratio));
            }
        }
        Ok(added)
    }
}

fn nbest_tokens(model: &dyn Corrector, input: &[TokenId], cfg: &BoostConfig) -> Vec<TokenSeq> {
    model
        .nbest(
            input,
            cfg.beam_width(),
            cfg.nbest,
            default_max_len(input.len()),
        )
        .into_iter()
        .map(|h| h.tokens)
        .collect()
}

/// Generator n-best on the correct sentence, filtered by the fluency condition.
pub fn gen_back_candidates(
    gen: &dyn Corrector,
    x_c: &[TokenId],
    cfg: &BoostConfig,
    lm: &NGramModel,
) -> Result<CandidateSet> {
    let mut set = CandidateSet::default();
    Filter::new(lm, cfg.sigma, x_c)?.absorb(nbest_tokens(gen, x_c, cfg), &mut set)?;
    Ok(set)
}

/// Adds the corrector's qualifying n-best outputs on `pair.source`; never removes members.
pub fn update_self_candidates(
    crt: &dyn Corrector,
    pair: &SentencePair<TokenId>,
    set: &mut CandidateSet,
    cfg: &BoostConfig,
    lm: &NGramModel,
) -> Result<usize> {
    let added = Filter::new(lm, cfg.sigma, &pair.target)?
        .absorb(nbest_tokens(crt, &pair.source, cfg), set)?;
    Ok(added.len())
}

/// Union of the corrector's n-best on `pair.source` and the generator's n-best on `pair.target`.
pub fn update_dual_candidates(
    crt: &dyn Corrector,
    gen: &dyn Corrector,
    pair: &SentencePair<TokenId>,
    set: &mut CandidateSet,
    cfg: &BoostConfig,
    lm: &NGramModel,
) -> Result<usize> {
    let filter = Filter::new(lm, cfg.sigma, &pair.target)?;
    let mut n = filter
        .absorb(nbest_tokens(crt, &pair.source, cfg), set)?
        .len();
    n += filter
        .absorb(nbest_tokens(gen, &pair.target, cfg), set)?
        .len();
    Ok(n)
}

/// `S*` (original pairs) and `C` (self-copied native pairs); `S` is their concatenation.
#[derive(Clone, Debug, Default)]
pub struct TrainingPools {
    pub original: Vec<SentencePair<TokenId>>,
    pub native: Vec<SentencePair<TokenId>>,
}

impl TrainingPools {
    pub fn new(
        original: Vec<SentencePair<TokenId>>,
        native_sentences: &[TokenSeq],
    ) -> Result<Self> {
        if original.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(Self {
            original,
            native: crate::textdata::self_copy_pairs(native_sentences),
        })
    }

    /// `|S|`.
    pub fn len(&self) -> usize {
        self.original.len() + self.native.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> &SentencePair<TokenId> {
        if i < self.original.len() {
            &self.original[i]
        } else {
            &self.native[i - self.original.len()]
        }
    }

    pub fn is_native(&self, i: usize) -> bool {
        i >= self.original.len()
    }

    /// `S̃*`: original pairs with source and target interchanged.
    pub fn interchanged(&self) -> Vec<SentencePair<TokenId>> {
        self.original.iter().map(SentencePair::swapped).collect()
    }
}

/// Candidate sets keyed by the correct sentence.
pub type CandidatePool = BTreeMap<TokenSeq, CandidateSet>;

/// One epoch's training data.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochSample {
    /// Indices into `S` drawn for this epoch.
    pub sampled: Vec<usize>,
    /// `S′`.
    pub boost: Vec<SentencePair<TokenId>>,
    /// `S″`.
    pub reversed: Vec<SentencePair<TokenId>>,
}

impl EpochSample {
    /// `S* ∪ S′` for the corrector.
    pub fn corrector_pairs(&self, pools: &TrainingPools) -> Vec<SentencePair<TokenId>> {
        pools.original.iter().chain(&self.boost).cloned().collect()
    }

    /// `S̃* ∪ S″` for the generator.
    pub fn generator_pairs(&self, pools: &TrainingPools) -> Vec<SentencePair<TokenId>> {
        pools
            .interchanged()
            .into_iter()
            .chain(self.reversed.iter().cloned())
            .collect()
    }
}

/// Draws `min(|S|, |S*|)` indices of `S` uniformly without replacement, in draw order.
pub fn sample_subset(pools: &TrainingPools, rng: &mut Rng) -> Vec<usize> {
    let k = pools.len().min(pools.original.len());
    sample(rng, pools.len(), k).into_vec()
}

/// For each sampled pair with a non-empty candidate set, draws `x′` (and `x″` when
/// `reversed`) uniformly from the set of its correct sentence.
pub fn build_boost_pairs(
    pools: &TrainingPools,
    sampled: Vec<usize>,
    candidates: &CandidatePool,
    reversed: bool,
    rng: &mut Rng,
) -> EpochSample {
    let mut boost = Vec::new();
    let mut rev = Vec::new();
    for &i in &sampled {
        let x_c = &pools.get(i).target;
        let Some(set) = candidates.get(x_c) else {
            continue;
        };
        if let Some(x1) = set.pick(rng) {
            boost.push(SentencePair::new(x1.clone(), x_c.clone()));
        }
        if reversed {
            if let Some(x2) = set.pick(rng) {
                rev.push(SentencePair::new(x_c.clone(), x2.clone()));
            }
        }
    }
    EpochSample {
        sampled,
        boost,
        reversed: rev,
    }
}

/// `sample_subset` followed by `build_boost_pairs`.
pub fn sample_epoch(
    pools: &TrainingPools,
    candidates: &CandidatePool,
    reversed: bool,
    rng: &mut Rng,
) -> EpochSample {
    let sampled = sample_subset(pools, rng);
    build_boost_pairs(pools, sampled, candidates, reversed, rng)
}

/// Distinct correct sentences of `S`.
pub fn owners(pools: &TrainingPools) -> BTreeSet<&TokenSeq> {
    (0..pools.len()).map(|i| &pools.get(i).target).collect()
}
