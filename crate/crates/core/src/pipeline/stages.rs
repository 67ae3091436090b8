//! The stage commands.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, InferenceMode};
use super::workspace::{ensure_parent, refuse_overwrite, require, write_file, Manifest, Workspace};
use crate::boost_inference::{
    correct_multi_round, correct_round_way, correct_single, CorrectionTrace, Stage,
};
use crate::boost_learning::{
    run_boost, CandidateLog, EpochStats, ModelSetup, Strategy, TrainingPools,
};
use crate::metrics::{self, gleu, EvaluationReport, GleuConfig};
use crate::ngram_lm::{train_lm as fit_lm, NGramModel};
use crate::seed::{derive_seed, rng_for};
use crate::seq2seq::{grad_check, CorrectionModel, Direction, Ensemble, ModelConfig};
use crate::textdata::{
    build_vocabulary, inject_errors, load_parallel_corpus, load_tsv_with_edits, read_lines,
    read_sentences, write_sentences, write_tsv_with_edits, CorpusFormat, Grammar, SentencePair,
    TokenId, TokenSeq, Vocabulary,
};
use crate::{Error, Result};

fn workspace(cfg: &ExperimentConfig) -> Workspace {
    Workspace::new(&cfg.paths.work_dir)
}

fn split_sizes(n: usize, ratio: [usize; 3]) -> [usize; 3] {
    let total: usize = ratio.iter().sum();
    let train = n * ratio[0] / total;
    let dev = n * ratio[1] / total;
    [train, dev, n - train - dev]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    pub native: usize,
    /// Pairs without any injected error.
    pub identity: usize,
}

/// Generates clean sentences, corrupts them and writes train/dev/test TSV splits with
/// labeled-edit sidecars (plus optional native sentences).
pub fn synthesize(cfg: &ExperimentConfig, force: bool) -> Result<SynthSummary> {
    let ws = workspace(cfg);
    let rules = cfg.synth.rule_config()?;
    let splits = ["train", "dev", "test"];
    let mut outputs: Vec<PathBuf> = splits
        .iter()
        .flat_map(|s| [ws.data(s), ws.edits(s)])
        .collect();
    if cfg.synth.native > 0 {
        outputs.push(ws.native());
    }
    refuse_overwrite(&outputs, force)?;
    let grammar = Grammar::new(cfg.synth.grammar.clone());
    let mut grng = rng_for(cfg.seed, "synth-grammar");
    let mut irng = rng_for(cfg.seed, "synth-inject");
    let pairs: Vec<SentencePair> = (0..cfg.synth.sentences)
        .map(|_| inject_errors(&grammar.sentence(&mut grng), &rules, &mut irng))
        .collect();
    let native: Vec<Vec<String>> = (0..cfg.synth.native)
        .map(|_| grammar.sentence(&mut grng))
        .collect();
    let sizes = split_sizes(pairs.len(), cfg.synth.split);
    let mut start = 0;
    for (split, n) in splits.iter().zip(sizes) {
        let path = ws.data(split);
        ensure_parent(&path)?;
        write_tsv_with_edits(&path, &ws.edits(split), &pairs[start..start + n])?;
        start += n;
    }
    if cfg.synth.native > 0 {
        write_sentences(&ws.native(), &native)?;
    }
    Manifest::write(&ws, "synthesize", cfg, &[], &outputs)?;
    Ok(SynthSummary {
        train: sizes[0],
        dev: sizes[1],
        test: sizes[2],
        native: native.len(),
        identity: pairs.iter().filter(|p| p.source == p.target).count(),
    })
}

fn split_path(cfg: &ExperimentConfig, split: &str) -> PathBuf {
    let explicit = match split {
        "train" => &cfg.paths.train,
        "dev" => &cfg.paths.dev,
        _ => &cfg.paths.test,
    };
    explicit
        .clone()
        .unwrap_or_else(|| workspace(cfg).data(split))
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("edits.jsonl")
}

/// Loads a parallel corpus; TSV files pick up a `.edits.jsonl` sidecar when present.
pub(crate) fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<SentencePair>> {
    require(path)?;
    match format {
        CorpusFormat::Tsv if sidecar(path).exists() => load_tsv_with_edits(path, &sidecar(path)),
        f => load_parallel_corpus(path, f),
    }
}

fn load_split(cfg: &ExperimentConfig, split: &str) -> Result<Vec<SentencePair>> {
    load_corpus(&split_path(cfg, split), cfg.corpus_format()?)
}

fn load_split_optional(cfg: &ExperimentConfig, split: &str) -> Result<Vec<SentencePair>> {
    let path = split_path(cfg, split);
    if path.exists() {
        load_split(cfg, split)
    } else {
        Ok(Vec::new())
    }
}

fn native_path(cfg: &ExperimentConfig) -> Option<PathBuf> {
    cfg.paths
        .native
        .clone()
        .or_else(|| Some(workspace(cfg).native()).filter(|p| p.exists()))
}

fn load_native(cfg: &ExperimentConfig) -> Result<Vec<Vec<String>>> {
    match native_path(cfg) {
        Some(p) => read_sentences(&p),
        None => Ok(Vec::new()),
    }
}

fn load_vocab(ws: &Workspace) -> Result<Vocabulary> {
    require(&ws.vocab())?;
    Vocabulary::from_surfaces(
        read_lines(&ws.vocab())?
            .into_iter()
            .filter(|l| !l.is_empty()),
    )
}

fn load_lm(ws: &Workspace, vocab: &Vocabulary) -> Result<NGramModel> {
    require(&ws.lm())?;
    let lm = NGramModel::load(&ws.lm())?;
    if lm.vocabulary().hash() != vocab.hash() {
        return Err(Error::InputMismatch(
            "language model and vocab.txt disagree; rerun train-lm".into(),
        ));
    }
    Ok(lm)
}

/// Builds the shared vocabulary from the training corpus and native text, then fits the
/// n-gram LM on the correct side of the training data plus native text.
pub fn train_lm(cfg: &ExperimentConfig, force: bool) -> Result<NGramModel> {
    let ws = workspace(cfg);
    let outputs = [ws.vocab(), ws.lm()];
    refuse_overwrite(&outputs, force)?;
    let train = load_split(cfg, "train")?;
    let native = load_native(cfg)?;
    let mut text: Vec<Vec<String>> = Vec::with_capacity(2 * train.len() + native.len());
    for p in &train {
        text.push(p.source.clone());
        text.push(p.target.clone());
    }
    text.extend(native.iter().cloned());
    let vocab = build_vocabulary(&text, cfg.vocab.max_size)?;
    let clean: Vec<TokenSeq> = train
        .iter()
        .map(|p| vocab.encode(&p.target))
        .chain(native.iter().map(|s| vocab.encode(s)))
        .collect();
    let lm = fit_lm(&clean, cfg.lm.order, cfg.lm.smoothing(), &vocab)?;
    let words = vocab.words().join("\n") + "\n";
    write_file(&ws.vocab(), words.as_bytes())?;
    lm.save(&ws.lm())?;
    let mut inputs = vec![split_path(cfg, "train")];
    inputs.extend(native_path(cfg));
    Manifest::write(&ws, "train-lm", cfg, &inputs, &outputs)?;
    Ok(lm)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub strategy: Strategy,
    pub direction: Direction,
    /// Epoch statistics per ensemble member.
    pub members: Vec<Vec<EpochStats>>,
}

fn member_setup(
    cfg: &ExperimentConfig,
    direction: Direction,
    member: usize,
) -> (ModelSetup, crate::boost_learning::BoostConfig) {
    let model = ModelConfig {
        direction,
        seed: derive_seed(cfg.seed, &format!("corrector-init-{member}")),
        ..cfg.model.clone()
    };
    let boost = crate::boost_learning::BoostConfig {
        seed: derive_seed(cfg.seed, &format!("boost-{member}")),
        ..cfg.boost.clone()
    };
    (
        ModelSetup {
            model,
            train: cfg.train.clone(),
        },
        boost,
    )
}

fn train_report_name(strategy: Strategy, direction: Direction) -> String {
    format!("train-{strategy}-{direction}")
}

/// Trains `cfg.ensemble` correction models with `strategy` in `direction`.
pub fn train(
    cfg: &ExperimentConfig,
    force: bool,
    strategy: Strategy,
    direction: Direction,
) -> Result<TrainSummary> {
    let ws = workspace(cfg);
    let vocab = load_vocab(&ws)?;
    let lm = load_lm(&ws, &vocab)?;
    let name = train_report_name(strategy, direction);
    let mut outputs = vec![ws.report(&name)];
    for k in 0..cfg.ensemble {
        outputs.push(ws.model(strategy, direction, k));
        if matches!(strategy, Strategy::Back | Strategy::Dual) {
            outputs.push(ws.generator(strategy, direction, k));
        }
        if strategy != Strategy::Base {
            outputs.push(ws.candidates(strategy, direction, k));
        }
    }
    refuse_overwrite(&outputs, force)?;
    let encode = |pairs: Vec<SentencePair>| -> Vec<SentencePair<TokenId>> {
        pairs.iter().map(|p| vocab.encode_pair(p)).collect()
    };
    let train = encode(load_split(cfg, "train")?);
    let dev = encode(load_split_optional(cfg, "dev")?);
    let native: Vec<TokenSeq> = if strategy == Strategy::Base {
        Vec::new()
    } else {
        load_native(cfg)?.iter().map(|s| vocab.encode(s)).collect()
    };
    let pools = TrainingPools::new(train, &native)?;
    let mut members = Vec::with_capacity(cfg.ensemble);
    for k in 0..cfg.ensemble {
        let (setup, boost) = member_setup(cfg, direction, k);
        let mut log = if strategy == Strategy::Base {
            None
        } else {
            let path = ws.candidates(strategy, direction, k);
            ensure_parent(&path)?;
            Some(CandidateLog::create(&path)?)
        };
        let run = run_boost(
            strategy,
            &pools,
            &dev,
            &setup,
            &boost,
            &lm,
            &vocab,
            log.as_mut(),
        )?;
        let path = ws.model(strategy, direction, k);
        ensure_parent(&path)?;
        run.corrector.save(&path)?;
        if let Some(gen) = &run.generator {
            gen.save(&ws.generator(strategy, direction, k))?;
        }
        members.push(run.stats);
    }
    let summary = TrainSummary {
        strategy,
        direction,
        members,
    };
    let json =
        serde_json::to_string_pretty(&summary).map_err(|e| Error::Format(e.to_string()))? + "\n";
    write_file(&ws.report(&name), json.as_bytes())?;
    let mut inputs = vec![
        ws.vocab(),
        ws.lm(),
        split_path(cfg, "train"),
        split_path(cfg, "dev"),
    ];
    inputs.extend(native_path(cfg));
    Manifest::write(&ws, &name, cfg, &inputs, &outputs)?;
    Ok(summary)
}

fn load_ensemble(
    cfg: &ExperimentConfig,
    ws: &Workspace,
    vocab: &Vocabulary,
    direction: Direction,
) -> Result<Ensemble> {
    let members = (0..cfg.ensemble)
        .map(|k| {
            let path = ws.model(cfg.strategy, direction, k);
            require(&path)?;
            let m = CorrectionModel::load(&path)?;
            m.check_vocabulary(vocab)?;
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(members)
}

#[derive(Clone, Debug, Default)]
pub struct CorrectOptions {
    /// Tokenized sentences, one per line; defaults to the sources of the test split.
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

#[derive(Serialize)]
struct TraceLine {
    sentence: usize,
    mode: InferenceMode,
    output: String,
    steps: Vec<TraceStepText>,
}

#[derive(Serialize)]
struct TraceStepText {
    round: usize,
    stage: Stage,
    input: String,
    output: String,
    f_before: f64,
    f_after: f64,
    accepted: bool,
}

fn trace_line(
    i: usize,
    mode: InferenceMode,
    out: &[TokenId],
    trace: &CorrectionTrace,
    vocab: &Vocabulary,
) -> TraceLine {
    TraceLine {
        sentence: i,
        mode,
        output: vocab.decode_line(out),
        steps: trace
            .steps
            .iter()
            .map(|s| TraceStepText {
                round: s.round,
                stage: s.stage,
                input: vocab.decode_line(&s.input),
                output: vocab.decode_line(&s.output),
                f_before: s.f_before,
                f_after: s.f_after,
                accepted: s.accepted,
            })
            .collect(),
    }
}

/// Corrects sentences with the models of `cfg.strategy` using `cfg.mode`.
/// Returns the output path.
pub fn correct(cfg: &ExperimentConfig, force: bool, opts: &CorrectOptions) -> Result<PathBuf> {
    let ws = workspace(cfg);
    let system = Workspace::system_name(cfg.strategy, cfg.mode);
    let output = opts.output.clone().unwrap_or_else(|| ws.output(&system));
    let mut outputs = vec![output.clone()];
    outputs.extend(opts.trace.clone());
    refuse_overwrite(&outputs, force)?;
    let vocab = load_vocab(&ws)?;
    let lm = load_lm(&ws, &vocab)?;
    let sentences: Vec<Vec<String>> = match &opts.input {
        Some(p) => {
            require(p)?;
            read_lines(p)?
                .iter()
                .map(|l| l.split_whitespace().map(str::to_string).collect())
                .collect()
        }
        None => load_split(cfg, "test")?
            .into_iter()
            .map(|p| p.source)
            .collect(),
    };
    let inputs: Vec<TokenSeq> = sentences.iter().map(|s| vocab.encode(s)).collect();
    let icfg = &cfg.inference;
    let results: Vec<(TokenSeq, CorrectionTrace)> = match cfg.mode {
        InferenceMode::Roundway => {
            let r2l = load_ensemble(cfg, &ws, &vocab, Direction::R2L)?;
            let l2r = load_ensemble(cfg, &ws, &vocab, Direction::L2R)?;
            inputs
                .par_iter()
                .map(|x| correct_round_way(&r2l, &l2r, x, icfg, &lm))
                .collect::<Result<Vec<_>>>()?
        }
        mode => {
            let model = load_ensemble(cfg, &ws, &vocab, cfg.model.direction)?;
            inputs
                .par_iter()
                .map(|x| match mode {
                    InferenceMode::Multi => correct_multi_round(&model, x, icfg, &lm),
                    _ => (
                        correct_single(&model, x, icfg, &lm),
                        CorrectionTrace::default(),
                    ),
                })
                .collect()
        }
    };
    let mut text = String::new();
    for (out, _) in &results {
        text += &vocab.decode_line(out);
        text.push('\n');
    }
    write_file(&output, text.as_bytes())?;
    if let Some(path) = &opts.trace {
        let mut lines = String::new();
        for (i, (out, trace)) in results.iter().enumerate() {
            let line = trace_line(i, cfg.mode, out, trace, &vocab);
            lines += &serde_json::to_string(&line).map_err(|e| Error::Format(e.to_string()))?;
            lines.push('\n');
        }
        write_file(path, lines.as_bytes())?;
    }
    let mut inputs = vec![ws.vocab(), ws.lm()];
    inputs.push(
        opts.input
            .clone()
            .unwrap_or_else(|| split_path(cfg, "test")),
    );
    let dirs: &[Direction] = if cfg.mode == InferenceMode::Roundway {
        &[Direction::R2L, Direction::L2R]
    } else {
        std::slice::from_ref(&cfg.model.direction)
    };
    for &d in dirs {
        inputs.extend((0..cfg.ensemble).map(|k| ws.model(cfg.strategy, d, k)));
    }
    Manifest::write(&ws, &format!("correct-{system}"), cfg, &inputs, &outputs)?;
    Ok(output)
}

#[derive(Clone, Debug, Default)]
pub struct EvaluateOptions {
    pub hypotheses: Option<PathBuf>,
    /// TSV (with optional edits sidecar) or `.m2`; defaults to the test split.
    pub gold: Option<PathBuf>,
    /// Tab-separated references per line, replacing the gold targets for GLEU.
    pub references: Option<PathBuf>,
    pub name: Option<String>,
}

/// Scores a hypothesis file and writes `reports/<name>.json` and `.txt`.
pub fn evaluate(
    cfg: &ExperimentConfig,
    force: bool,
    opts: &EvaluateOptions,
) -> Result<EvaluationReport> {
    let ws = workspace(cfg);
    let system = Workspace::system_name(cfg.strategy, cfg.mode);
    let name = opts.name.clone().unwrap_or_else(|| system.clone());
    let outputs = [ws.report(&name), ws.report_table(&name)];
    refuse_overwrite(&outputs, force)?;
    let hyp_path = opts
        .hypotheses
        .clone()
        .unwrap_or_else(|| ws.output(&system));
    require(&hyp_path)?;
    let gold_path = opts.gold.clone().unwrap_or_else(|| split_path(cfg, "test"));
    let format = match gold_path.extension().and_then(|e| e.to_str()) {
        Some("m2") => CorpusFormat::M2,
        _ if opts.gold.is_some() => CorpusFormat::Tsv,
        _ => cfg.corpus_format()?,
    };
    let gold = load_corpus(&gold_path, format)?;
    let hyps: Vec<Vec<String>> = read_lines(&hyp_path)?
        .iter()
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect();
    if hyps.len() != gold.len() {
        return Err(Error::InputMismatch(format!(
            "{} hypotheses for {} gold sentences",
            hyps.len(),
            gold.len()
        )));
    }
    let mut report = metrics::evaluate(&gold, &hyps)?;
    let mut inputs = vec![hyp_path, gold_path];
    if let Some(refs) = &opts.references {
        require(refs)?;
        let references: Vec<Vec<Vec<String>>> = read_lines(refs)?
            .iter()
            .map(|l| {
                l.split('\t')
                    .map(|r| r.split_whitespace().map(str::to_string).collect())
                    .collect()
            })
            .collect();
        if references.len() != gold.len() {
            return Err(Error::InputMismatch(
                "reference count differs from gold".into(),
            ));
        }
        let sources: Vec<Vec<String>> = gold.iter().map(|p| p.source.clone()).collect();
        report.gleu = gleu(&sources, &hyps, &references, &GleuConfig::default());
        inputs.push(refs.clone());
    }
    write_file(&ws.report(&name), report.to_json().as_bytes())?;
    write_file(&ws.report_table(&name), report.to_table().as_bytes())?;
    Manifest::write(&ws, &format!("evaluate-{name}"), cfg, &inputs, &outputs)?;
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct GradcheckOptions {
    pub pairs: usize,
    pub samples: usize,
    pub epsilon: f64,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self {
            pairs: 20,
            samples: 200,
            epsilon: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradcheckSummary {
    pub parameters: usize,
    pub pairs: usize,
    pub checked: usize,
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
}

/// Gradient check of a freshly initialized model (dims from `cfg.model`) on random pairs
/// drawn from the training split, or from a small synthesized corpus when none exists.
pub fn gradcheck(cfg: &ExperimentConfig, opts: &GradcheckOptions) -> Result<GradcheckSummary> {
    let mut rng = rng_for(cfg.seed, "gradcheck-pairs");
    let pool: Vec<SentencePair> = match load_split_optional(cfg, "train")? {
        p if !p.is_empty() => p,
        _ => {
            let grammar = Grammar::new(cfg.synth.grammar.clone());
            let rules = cfg.synth.rule_config()?;
            (0..opts.pairs.max(1) * 5)
                .map(|_| inject_errors(&grammar.sentence(&mut rng), &rules, &mut rng))
                .collect()
        }
    };
    let picked: Vec<&SentencePair> =
        rand::seq::index::sample(&mut rng, pool.len(), opts.pairs.min(pool.len()))
            .iter()
            .map(|i| &pool[i])
            .collect();
    let text: Vec<Vec<String>> = picked
        .iter()
        .flat_map(|p| [p.source.clone(), p.target.clone()])
        .collect();
    let vocab = build_vocabulary(&text, cfg.vocab.max_size)?;
    let model = CorrectionModel::new(
        ModelConfig {
            dropout: 0.0,
            seed: derive_seed(cfg.seed, "gradcheck-init"),
            ..cfg.model.clone()
        },
        &vocab,
    )?;
    let mut summary = GradcheckSummary {
        parameters: model.num_params(),
        pairs: picked.len(),
        checked: 0,
        max_relative_error: 0.0,
        max_absolute_error: 0.0,
    };
    for (i, p) in picked.iter().enumerate() {
        let r = grad_check(
            &model,
            &vocab.encode_pair(p),
            opts.epsilon,
            opts.samples,
            derive_seed(cfg.seed, &format!("gradcheck-{i}")),
        )?;
        summary.checked += r.checked;
        summary.max_relative_error = summary.max_relative_error.max(r.max_relative_error);
        summary.max_absolute_error = summary.max_absolute_error.max(r.max_absolute_error);
    }
    Ok(summary)
}
