//! Epoch loops of plain, back-, self- and dual-boost training.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::store::CandidateLog;
use super::{
    build_boost_pairs, nbest_tokens, owners, sample_epoch, sample_subset, BoostConfig,
    CandidatePool, CandidateSet, EpochSample, Filter, Strategy, TrainingPools,
};
use crate::ngram_lm::NGramModel;
use crate::seed::{derive_seed, rng_for, Rng};
use crate::seq2seq::{
    evaluate_loss, train_epoch, CorrectionModel, ModelConfig, Optimizer, TrainConfig,
};
use crate::textdata::{SentencePair, TokenId, TokenSeq, Vocabulary};
use crate::Result;

/// Architecture and optimizer settings shared by the corrector and the generator.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelSetup {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// `|S_t|`.
    pub sampled: usize,
    /// `|S′|` used in this epoch's corrector update.
    pub boost_pairs: usize,
    /// `|S″|` used in this epoch's generator update.
    pub reversed_pairs: usize,
    pub corrector_loss: f64,
    pub generator_loss: Option<f64>,
    pub dev_loss: Option<f64>,
    pub learning_rate: f64,
    /// Candidates across all sets after the epoch.
    pub candidates: usize,
    pub new_candidates: usize,
}

pub struct BoostRun {
    pub strategy: Strategy,
    pub corrector: CorrectionModel,
    pub generator: Option<CorrectionModel>,
    pub candidates: CandidatePool,
    pub stats: Vec<EpochStats>,
}

struct Learner {
    model: CorrectionModel,
    opt: Optimizer,
    rng: Rng,
}

impl Learner {
    fn new(
        model: ModelConfig,
        train: &TrainConfig,
        vocab: &Vocabulary,
        seed: u64,
        stream: &str,
    ) -> Result<Self> {
        let model = CorrectionModel::new(model, vocab)?;
        Ok(Self {
            opt: Optimizer::new(train.clone(), &model)?,
            model,
            rng: rng_for(seed, stream),
        })
    }

    fn epoch(
        &mut self,
        pairs: &[SentencePair<TokenId>],
        dev: &[SentencePair<TokenId>],
    ) -> Result<(f64, Option<f64>)> {
        let loss = train_epoch(&mut self.model, pairs, &mut self.opt, &mut self.rng)?;
        let dev_loss = if dev.is_empty() {
            None
        } else {
            let d = evaluate_loss(&self.model, dev)?;
            self.opt.observe_dev_loss(d);
            Some(d)
        };
        Ok((loss, dev_loss))
    }
}

fn generator_config(setup: &ModelSetup, seed: u64) -> ModelConfig {
    ModelConfig {
        seed: derive_seed(seed, "generator-init"),
        ..setup.model.clone()
    }
}

fn total(pool: &CandidatePool) -> usize {
    pool.values().map(CandidateSet::len).sum()
}

struct Inserter<'a> {
    lm: &'a NGramModel,
    sigma: f64,
    strategy: Strategy,
    log: Option<&'a mut CandidateLog>,
}

impl Inserter<'_> {
    fn insert(
        &mut self,
        pool: &mut CandidatePool,
        owner: &TokenSeq,
        outputs: Vec<TokenSeq>,
        epoch: usize,
    ) -> Result<usize> {
        let filter = Filter::new(self.lm, self.sigma, owner)?;
        let set = pool.entry(owner.clone()).or_default();
        let added = filter.absorb(outputs, set)?;
        if let Some(log) = self.log.as_deref_mut() {
            for (tokens, ratio) in &added {
                log.append(owner, tokens, *ratio, epoch, self.strategy)?;
            }
        }
        Ok(added.len())
    }
}

/// Trains a corrector with `strategy`. With no native data and no qualifying candidates,
/// every strategy follows the exact trajectory of `Strategy::Base` for the same seed.
#[allow(clippy::too_many_arguments)]
pub fn run_boost(
    strategy: Strategy,
    pools: &TrainingPools,
    dev: &[SentencePair<TokenId>],
    setup: &ModelSetup,
    cfg: &BoostConfig,
    lm: &NGramModel,
    vocab: &Vocabulary,
    log: Option<&mut CandidateLog>,
) -> Result<BoostRun> {
    cfg.validate()?;
    setup.model.validate()?;
    if pools.original.is_empty() {
        return Err(crate::Error::EmptyCorpus);
    }
    let mut crt = Learner::new(
        setup.model.clone(),
        &setup.train,
        vocab,
        cfg.seed,
        "corrector-train",
    )?;
    let mut sample_rng = rng_for(cfg.seed, "boost-sample");
    let mut ins = Inserter {
        lm,
        sigma: cfg.sigma,
        strategy,
        log,
    };
    let mut pool = CandidatePool::new();
    let mut stats = Vec::with_capacity(cfg.epochs);
    let dev_swapped: Vec<_> = dev.iter().map(SentencePair::swapped).collect();
    let interchanged = pools.interchanged();
    let mut generator = None;

    if strategy == Strategy::Back {
        let mut gen = Learner::new(
            generator_config(setup, cfg.seed),
            &setup.train,
            vocab,
            cfg.seed,
            "generator-train",
        )?;
        for e in 0..cfg.generator_epochs.unwrap_or(cfg.epochs) {
            let (loss, _) = gen.epoch(&interchanged, &dev_swapped)?;
            log::info!("generator epoch {} loss {loss:.4}", e + 1);
        }
        let owner_list: Vec<&TokenSeq> = owners(pools).into_iter().collect();
        let outputs: Vec<Vec<TokenSeq>> = owner_list
            .par_iter()
            .map(|x| nbest_tokens(&gen.model, x, cfg))
            .collect();
        for (owner, out) in owner_list.into_iter().zip(outputs) {
            ins.insert(&mut pool, owner, out, 0)?;
        }
        log::info!("back-boost candidates: {}", total(&pool));
        generator = Some(gen);
    } else if strategy == Strategy::Dual {
        generator = Some(Learner::new(
            generator_config(setup, cfg.seed),
            &setup.train,
            vocab,
            cfg.seed,
            "generator-train",
        )?);
    }

    let mut current = EpochSample {
        sampled: Vec::new(),
        boost: Vec::new(),
        reversed: Vec::new(),
    };
    for epoch in 1..=cfg.epochs {
        if strategy == Strategy::Back {
            current = sample_epoch(pools, &pool, false, &mut sample_rng);
        }
        let crt_pairs = current.corrector_pairs(pools);
        let ((crt_loss, dev_loss), gen_loss) = match (strategy, generator.as_mut()) {
            (Strategy::Dual, Some(gen)) => {
                let gen_pairs = current.generator_pairs(pools);
                let (c, g) = rayon::join(
                    || crt.epoch(&crt_pairs, dev),
                    || gen.epoch(&gen_pairs, &dev_swapped),
                );
                (c?, Some(g?.0))
            }
            _ => (crt.epoch(&crt_pairs, dev)?, None),
        };
        let used = (
            current.sampled.len(),
            current.boost.len(),
            current.reversed.len(),
        );
        let mut new_candidates = 0;
        if matches!(strategy, Strategy::SelfBoost | Strategy::Dual) {
            let sampled = sample_subset(pools, &mut sample_rng);
            let gen_model = match (strategy, generator.as_ref()) {
                (Strategy::Dual, Some(g)) if cfg.generator_candidates => Some(&g.model),
                _ => None,
            };
            let crt_model = &crt.model;
            let outputs: Vec<Vec<TokenSeq>> = sampled
                .par_iter()
                .map(|&i| {
                    let pair = pools.get(i);
                    let mut out = Vec::new();
                    if cfg.native_self_candidates || !pools.is_native(i) {
                        out.extend(nbest_tokens(crt_model, &pair.source, cfg));
                    }
                    if let Some(g) = gen_model {
                        out.extend(nbest_tokens(g, &pair.target, cfg));
                    }
                    out
                })
                .collect();
            for (&i, out) in sampled.iter().zip(outputs) {
                new_candidates += ins.insert(&mut pool, &pools.get(i).target, out, epoch)?;
            }
            current = build_boost_pairs(
                pools,
                sampled,
                &pool,
                strategy == Strategy::Dual,
                &mut sample_rng,
            );
        }
        let s = EpochStats {
            epoch,
            sampled: used.0,
            boost_pairs: used.1,
            reversed_pairs: used.2,
            corrector_loss: crt_loss,
            generator_loss: gen_loss,
            dev_loss,
            learning_rate: crt.opt.learning_rate,
            candidates: total(&pool),
            new_candidates,
        };
        log::info!(
            "{strategy} epoch {epoch}: loss {crt_loss:.4} dev {:?} |S'| {} |S''| {} candidates {}",
            dev_loss,
            s.boost_pairs,
            s.reversed_pairs,
            s.candidates
        );
        stats.push(s);
    }
    if let Some(log) = ins.log {
        log.flush()?;
    }
    Ok(BoostRun {
        strategy,
        corrector: crt.model,
        generator: generator.map(|g| g.model),
        candidates: pool,
        stats,
    })
}

pub fn run_base(
    original: &[SentencePair<TokenId>],
    dev: &[SentencePair<TokenId>],
    setup: &ModelSetup,
    cfg: &BoostConfig,
    lm: &NGramModel,
    vocab: &Vocabulary,
) -> Result<BoostRun> {
    let pools = TrainingPools::new(original.to_vec(), &[])?;
    run_boost(Strategy::Base, &pools, dev, setup, cfg, lm, vocab, None)
}

pub fn run_back_boost(
    pools: &TrainingPools,
    dev: &[SentencePair<TokenId>],
    setup: &ModelSetup,
    cfg: &BoostConfig,
    lm: &NGramModel,
    vocab: &Vocabulary,
) -> Result<BoostRun> {
    run_boost(Strategy::Back, pools, dev, setup, cfg, lm, vocab, None)
}

pub fn run_self_boost(
    pools: &TrainingPools,
    dev: &[SentencePair<TokenId>],
    setup: &ModelSetup,
    cfg: &BoostConfig,
    lm: &NGramModel,
    vocab: &Vocabulary,
) -> Result<BoostRun> {
    run_boost(Strategy::SelfBoost, pools, dev, setup, cfg, lm, vocab, None)
}

pub fn run_dual_boost(
    pools: &TrainingPools,
    dev: &[SentencePair<TokenId>],
    setup: &ModelSetup,
    cfg: &BoostConfig,
    lm: &NGramModel,
    vocab: &Vocabulary,
) -> Result<BoostRun> {
    run_boost(Strategy::Dual, pools, dev, setup, cfg, lm, vocab, None)
}
