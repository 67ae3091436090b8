//! Acceptance suite: one PASS/FAIL line per criterion. Runs the end-to-end experiments
//! (three seeds plus a determinism rerun) in parallel threads; expect tens of minutes on
//! a single core.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;
use std::time::Instant;

use common::{identity, Fixture, RuleCorrector};
use fbgec::boost_inference::{
    correct_multi_round, correct_round_way, correct_single, InferenceConfig,
};
use fbgec::boost_learning::{fluency_boost_condition, read_candidate_log, sequence_hash, Strategy};
use fbgec::metrics::{
    evaluate as score_pairs, extract_edits, f_beta, gleu, m2_score, Edit, EvaluationReport,
    GleuConfig,
};
use fbgec::ngram_lm::{train_lm as fit_lm, NGramModel, Smoothing};
use fbgec::pipeline::{
    correct, evaluate, gradcheck, synthesize, train, train_lm, CorrectOptions, EvaluateOptions,
    ExperimentConfig, GradcheckOptions, InferenceMode, TrainSummary, Workspace,
};
use fbgec::seed::rng_for;
use fbgec::seq2seq::Direction;
use fbgec::textdata::{
    load_tsv_with_edits, write_tsv_with_edits, ErrorType, LabeledEdit, SentencePair, TokenId,
    TokenSeq, Vocabulary,
};
use rand::Rng;

struct Outcome {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(id: u32, title: &'static str, pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            id,
            title,
            pass,
            detail: detail.into(),
        }
    }

    fn failed(id: u32, title: &'static str, err: impl std::fmt::Display) -> Self {
        Outcome::new(id, title, false, format!("error: {err}"))
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn criterion_1() -> Outcome {
    let table = [
        (74.12, 36.30, 61.34),
        (68.45, 40.18, 60.00),
        (65.49, 33.14, 54.79),
        (62.74, 32.96, 53.14),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (p, r, expected) in table {
        let got = f_beta(p, r, 0.5);
        let ok = (round2(got) - expected).abs() <= 0.005 + 1e-9;
        pass &= ok;
        parts.push(format!(
            "({p:.2}, {r:.2}) -> {got:.4} ~ {:.2} vs {expected:.2} {}",
            round2(got),
            if ok { "ok" } else { "MISMATCH" }
        ));
    }
    Outcome::new(
        1,
        "F0.5 matches the reference triples",
        pass,
        parts.join("; "),
    )
}

/// Log-probability decreases within round-off of an equal sum only need to keep f from rising.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn criterion_2() -> Outcome {
    let mut rng = rng_for(2, "fluency-fixtures");
    const ROUNDOFF: f64 = 1e-12;
    let (mut fixtures, mut substitutions, mut ties, mut violations) =
        (0usize, 0usize, 0usize, Vec::new());
    for model in 0..100 {
        let size = rng.gen_range(2..40);
        let surfaces: Vec<String> = (0..size).map(|i| format!("w{i}")).collect();
        let vocab = Vocabulary::from_surfaces(&surfaces).unwrap();
        let ids: Vec<TokenId> = surfaces.iter().map(|w| vocab.id(w)).collect();
        let corpus: Vec<TokenSeq> = (0..rng.gen_range(1..30))
            .map(|_| {
                (0..rng.gen_range(1..9))
                    .map(|_| ids[rng.gen_range(0..ids.len())])
                    .collect()
            })
            .collect();
        let order = rng.gen_range(1..=4);
        let lm = fit_lm(&corpus, order, Smoothing::default(), &vocab).unwrap();
        for _ in 0..100 {
            fixtures += 1;
            let x: TokenSeq = (0..rng.gen_range(1..13))
                .map(|_| ids[rng.gen_range(0..ids.len())])
                .collect();
            let s = lm.fluency(&x).unwrap();
            if !(s.f > 0.0 && s.f <= 1.0) || s.f.to_bits() != (1.0 / (1.0 + s.h)).to_bits() {
                violations.push(format!("model {model}: h {} f {}", s.h, s.f));
            }
            let lp = lm.sentence_log_prob(&x);
            let pos = rng.gen_range(0..x.len());
            for &t in &ids {
                if t == x[pos] {
                    continue;
                }
                let mut y = x.clone();
                y[pos] = t;
                let ly = lm.sentence_log_prob(&y);
                if ly < lp {
                    let fy = lm.fluency(&y).unwrap().f;
                    if lp - ly <= ROUNDOFF * lp.abs() {
                        ties += 1;
                        if fy > s.f {
                            violations.push(format!(
                                "model {model}: round-off substitution at {pos} raised f"
                            ));
                        }
                        continue;
                    }
                    substitutions += 1;
                    if !(fy < s.f) {
                        violations.push(format!(
                            "model {model}: substitution at {pos} kept f {fy} >= {}",
                            s.f
                        ));
                    }
                }
            }
        }
    }
    Outcome::new(
        2,
        "fluency range, identity and monotonicity",
        violations.is_empty(),
        format!(
            "{fixtures} fixtures, {substitutions} probability-decreasing substitutions, {ties} round-off ties, {} violations{}",
            violations.len(),
            violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
        ),
    )
}

fn criterion_4(work: &Path) -> Outcome {
    const TITLE: &str = "gradient check on a tiny model";
    let cfg = match ExperimentConfig::from_toml_with_overrides(
        "",
        &[
            "seed=4".into(),
            "model.embedding_dim=8".into(),
            "model.hidden_dim=8".into(),
            format!("paths.work_dir={:?}", work.display().to_string()),
        ],
    ) {
        Ok(c) => c,
        Err(e) => return Outcome::failed(4, TITLE, e),
    };
    let opts = GradcheckOptions {
        pairs: 20,
        samples: 200,
        epsilon: 1e-5,
    };
    match gradcheck(&cfg, &opts) {
        Ok(s) => Outcome::new(
            4,
            TITLE,
            s.parameters <= 10_000 && s.pairs == 20 && s.max_relative_error < 1e-4,
            format!(
                "{} parameters, {} pairs, {} coordinates, max relative error {:.3e} (abs {:.3e})",
                s.parameters, s.pairs, s.checked, s.max_relative_error, s.max_absolute_error
            ),
        ),
        Err(e) => Outcome::failed(4, TITLE, e),
    }
}

fn criterion_5() -> Outcome {
    let fx = Fixture::new();
    let cfg = InferenceConfig::default();
    let mut problems = Vec::new();

    let x = fx.enc("She come to park .");
    let (out, trace) = correct_multi_round(&fx.one_per_pass(), &x, &cfg, &fx.lm);
    let fs: Vec<f64> = std::iter::once(fx.f(&x))
        .chain(trace.steps.iter().filter(|s| s.accepted).map(|s| s.f_after))
        .collect();
    if trace.accepted_rounds() != 2 || fx.dec(&out) != "She comes to the park ." {
        problems.push(format!(
            "two-error input: {} accepted rounds, output {:?}",
            trace.accepted_rounds(),
            fx.dec(&out)
        ));
    }
    if !fs.windows(2).all(|w| w[1] > w[0]) {
        problems.push(format!("fluency not strictly increasing: {fs:?}"));
    }

    let (same, id_trace) = correct_multi_round(&identity(), &x, &cfg, &fx.lm);
    if same != x || id_trace.steps.len() != 1 || id_trace.steps[0].accepted {
        problems.push(format!(
            "identity model ran {} rounds",
            id_trace.steps.len()
        ));
    }

    let chain = common::ladder(&fx);
    let climber = RuleCorrector {
        direction: Direction::L2R,
        rule: |y: &[TokenId]| match chain.iter().position(|c| c == y) {
            Some(i) if i + 1 < chain.len() => chain[i + 1].clone(),
            _ => y.to_vec(),
        },
    };
    let mut rng = rng_for(5, "multi-round-inputs");
    let mut inputs = 0;
    let mut longest = 0;
    for max_rounds in 1..=cfg.max_rounds {
        let capped = InferenceConfig {
            max_rounds,
            ..cfg.clone()
        };
        let (_, t) = correct_multi_round(&climber, &chain[0], &capped, &fx.lm);
        if t.steps.len() > max_rounds {
            problems.push(format!("ladder exceeded {max_rounds} rounds"));
        }
        longest = longest.max(t.steps.len());
        for _ in 0..200 {
            inputs += 1;
            let y: TokenSeq = (0..rng.gen_range(1..10))
                .map(|_| rng.gen_range(4..fx.vocab.len() as TokenId))
                .collect();
            let (_, t) = correct_multi_round(&fx.one_per_pass(), &y, &capped, &fx.lm);
            if t.steps.len() > max_rounds {
                problems.push(format!("random input exceeded {max_rounds} rounds"));
            }
        }
    }
    Outcome::new(
        5,
        "multi-round inference fixtures",
        problems.is_empty(),
        format!(
            "2-error input: {} accepted rounds, f {:?}; identity: {} rejected round; {inputs} random inputs and a ladder reaching {longest} rounds within caps{}",
            trace.accepted_rounds(),
            fs.iter().map(|f| format!("{f:.4}")).collect::<Vec<_>>(),
            id_trace.steps.len(),
            problems.first().map(|p| format!("; {p}")).unwrap_or_default()
        ),
    )
}

fn words(s: &str) -> Vec<String> {
    common::words(s)
}

fn criterion_8() -> Outcome {
    let mut checks: Vec<(&str, bool)> = Vec::new();
    let s = vec![
        words("she comes to the park ."),
        words("they read two books ."),
    ];
    let refs: Vec<Vec<Vec<String>>> = s.iter().map(|x| vec![x.clone()]).collect();
    checks.push((
        "GLEU identity = 100",
        (gleu(&s, &s, &refs, &GleuConfig::default()) - 100.0).abs() < 1e-6,
    ));

    let hyp = vec![words("she comes to the park today .")];
    let src = vec![words("she come to park today .")];
    checks.push((
        "GLEU hypothesis = reference != source gives 100",
        (gleu(&src, &hyp, &[vec![hyp[0].clone()]], &GleuConfig::default()) - 100.0).abs() < 1e-6,
    ));
    checks.push((
        "GLEU h=a b, r=a c, s=a b gives 0",
        gleu(
            &[words("a b")],
            &[words("a b")],
            &[vec![words("a c")]],
            &GleuConfig::default(),
        )
        .abs()
            < 1e-6,
    ));
    let bigram = GleuConfig {
        max_n: 2,
        ..GleuConfig::default()
    };
    checks.push((
        "GLEU bigram hand case sqrt(1/6)",
        (gleu(
            &[words("a x c")],
            &[words("a b c")],
            &[vec![words("a b d")]],
            &bigram,
        ) - 100.0 * (1.0f64 / 6.0).sqrt())
        .abs()
            < 1e-6,
    ));

    let e = |b: usize, end: usize, r: &str| Edit {
        begin: b,
        end,
        replacement: words(r),
    };
    let gold = vec![vec![vec![e(1, 2, "x")]]];
    match m2_score(&[words("a b c")], &[words("a b c")], &gold, 0.5) {
        Ok(m) => checks.push((
            "M2 null system = (100, 0, 0)",
            (m.scores.precision, m.scores.recall, m.scores.f_beta) == (100.0, 0.0, 0.0),
        )),
        Err(_) => checks.push(("M2 null system = (100, 0, 0)", false)),
    }
    match m2_score(&[words("a b c")], &[words("a x c")], &gold, 0.5) {
        Ok(m) => checks.push((
            "M2 perfect match = 100",
            (m.scores.f_beta - 100.0).abs() < 1e-6,
        )),
        Err(_) => checks.push(("M2 perfect match = 100", false)),
    }
    match m2_score(&[words("a b c d")], &[words("a x c y")], &gold, 0.5) {
        Ok(m) => checks.push((
            "M2 P=50 R=100 F0.5 = 55.5556",
            (m.scores.f_beta - 1.25 * 50.0 * 100.0 / (0.25 * 50.0 + 100.0)).abs() < 1e-6,
        )),
        Err(_) => checks.push(("M2 P=50 R=100 F0.5 = 55.5556", false)),
    }
    checks.push((
        "merged edit a b c -> a x y c",
        extract_edits(&words("a b c"), &words("a x y c")) == vec![e(1, 2, "x y")],
    ));

    let labeled = |b: usize, end: usize, r: &str, kind: ErrorType| LabeledEdit {
        begin: b,
        end,
        replacement: words(r),
        kind,
    };
    let pair = SentencePair {
        source: words("she come to park"),
        target: words("she comes to the park"),
        edits: Some(vec![
            labeled(1, 2, "comes", ErrorType::Sva),
            labeled(3, 3, "the", ErrorType::ArtOrDet),
        ]),
    };
    match score_pairs(
        std::slice::from_ref(&pair),
        &[words("she come to the park")],
    ) {
        Ok(r) => checks.push((
            "per-type recall ArtOrDet 100, SVA 0",
            r.per_type["ArtOrDet"].recall == 100.0 && r.per_type["SVA"].recall == 0.0,
        )),
        Err(_) => checks.push(("per-type recall ArtOrDet 100, SVA 0", false)),
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    Outcome::new(
        8,
        "metric fixtures",
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} fixtures match", checks.len())
        } else {
            format!("failed: {}", failed.join(", "))
        },
    )
}

const SETTINGS: &[&str] = &[
    "model.embedding_dim=16",
    "model.hidden_dim=32",
    "boost.epochs=10",
    "boost.nbest=5",
    "boost.beam=5",
];

fn config(work: &Path, seed: u64, extra: &[String]) -> fbgec::Result<ExperimentConfig> {
    let mut sets: Vec<String> = SETTINGS.iter().map(|s| s.to_string()).collect();
    sets.push(format!("seed={seed}"));
    sets.push(format!("paths.work_dir={:?}", work.display().to_string()));
    sets.extend(extra.iter().cloned());
    ExperimentConfig::from_toml_with_overrides("", &sets)
}

fn with(
    cfg: &ExperimentConfig,
    strategy: Strategy,
    mode: InferenceMode,
    direction: Direction,
) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.strategy = strategy;
    c.mode = mode;
    c.model.direction = direction;
    c
}

struct LearningRun {
    cfg: ExperimentConfig,
    base: EvaluationReport,
    dual: EvaluationReport,
    summaries: Vec<TrainSummary>,
}

/// Synthesize, fit the LM, train base and dual-boost correctors, correct and score the test split.
fn learning_pipeline(work: &Path, seed: u64) -> fbgec::Result<LearningRun> {
    let cfg = config(work, seed, &[])?;
    synthesize(&cfg, false)?;
    train_lm(&cfg, false)?;
    let mut summaries = Vec::new();
    let mut reports = Vec::new();
    for strategy in [Strategy::Base, Strategy::Dual] {
        summaries.push(train(&cfg, false, strategy, Direction::L2R)?);
        let c = with(&cfg, strategy, InferenceMode::Single, Direction::L2R);
        correct(&c, false, &CorrectOptions::default())?;
        reports.push(evaluate(&c, false, &EvaluateOptions::default())?);
    }
    let dual = reports.pop().expect("dual report");
    let base = reports.pop().expect("base report");
    Ok(LearningRun {
        cfg,
        base,
        dual,
        summaries,
    })
}

struct Soundness {
    checked: usize,
    epochs: usize,
    violations: Vec<String>,
}

fn candidate_soundness(
    cfg: &ExperimentConfig,
    summaries: &[TrainSummary],
) -> fbgec::Result<Soundness> {
    let ws = Workspace::new(&cfg.paths.work_dir);
    let lm = NGramModel::load(&ws.lm())?;
    let vocab = lm.vocabulary().clone();
    let train_pairs = load_tsv_with_edits(&ws.data("train"), &ws.edits("train"))?;
    let owners: HashMap<String, TokenSeq> = train_pairs
        .iter()
        .map(|p| {
            let t = vocab.encode(&p.target);
            (sequence_hash(&t), t)
        })
        .collect();
    let original = train_pairs.len();
    let mut out = Soundness {
        checked: 0,
        epochs: 0,
        violations: Vec::new(),
    };
    for s in summaries.iter().filter(|s| s.strategy != Strategy::Base) {
        for rec in read_candidate_log(&ws.candidates(s.strategy, s.direction, 0))? {
            out.checked += 1;
            let Some(owner) = owners.get(&rec.owner) else {
                out.violations
                    .push(format!("{}: unknown owner {}", s.strategy, rec.owner));
                continue;
            };
            if &rec.tokens == owner {
                out.violations.push(format!(
                    "{}: candidate equals its correct sentence",
                    s.strategy
                ));
            }
            if !fluency_boost_condition(owner, &rec.tokens, &lm, cfg.boost.sigma)? {
                out.violations.push(format!(
                    "{}: candidate with ratio {:.4} fails sigma",
                    s.strategy, rec.ratio
                ));
            }
        }
        for e in s.members.iter().flatten() {
            out.epochs += 1;
            if e.sampled > original || e.boost_pairs > original || e.reversed_pairs > original {
                out.violations.push(format!(
                    "{} epoch {}: |S'| {} exceeds |S*| {original}",
                    s.strategy, e.epoch, e.boost_pairs
                ));
            }
        }
    }
    Ok(out)
}

struct RoundWay {
    l2r: f64,
    r2l: f64,
    round_way: f64,
    per_type: BTreeMap<String, [f64; 3]>,
}

/// Scores single-direction and round-way correction with base models on a test set that
/// joins an agreement-only subset and an article-only subset.
fn round_way_experiment(cfg: &ExperimentConfig) -> fbgec::Result<RoundWay> {
    train(cfg, false, Strategy::Base, Direction::R2L)?;
    let subsets: [(&str, &[&str]); 2] = [
        ("sva", &["subject_verb_agreement"]),
        ("artordet", &["article_deletion", "article_substitution"]),
    ];
    let mut pairs = Vec::new();
    for (i, (name, rules)) in subsets.iter().enumerate() {
        let dir = cfg.paths.work_dir.join(format!("subset-{name}"));
        let mut sets = vec![
            "synth.sentences=250".to_string(),
            "synth.split=[0, 0, 1]".to_string(),
            "synth.rule_prob=0.0".to_string(),
        ];
        sets.extend(rules.iter().map(|r| format!("synth.rules.{r}=0.5")));
        let sub = config(&dir, cfg.seed * 1000 + i as u64 + 1, &sets)?;
        synthesize(&sub, false)?;
        let sws = Workspace::new(&dir);
        pairs.extend(load_tsv_with_edits(&sws.data("test"), &sws.edits("test"))?);
    }
    let test: PathBuf = cfg.paths.work_dir.join("roundway-test.tsv");
    write_tsv_with_edits(&test, &test.with_extension("edits.jsonl"), &pairs)?;
    let mut base = cfg.clone();
    base.paths.test = Some(test);
    let systems = [
        ("l2r", InferenceMode::Single, Direction::L2R),
        ("r2l", InferenceMode::Single, Direction::R2L),
        ("roundway", InferenceMode::Roundway, Direction::L2R),
    ];
    let mut recalls = [0.0; 3];
    let mut per_type: BTreeMap<String, [f64; 3]> = BTreeMap::new();
    for (k, (name, mode, dir)) in systems.into_iter().enumerate() {
        let c = with(&base, Strategy::Base, mode, dir);
        let output = cfg
            .paths
            .work_dir
            .join(format!("outputs/roundway-{name}.txt"));
        correct(
            &c,
            false,
            &CorrectOptions {
                output: Some(output.clone()),
                ..CorrectOptions::default()
            },
        )?;
        let report = evaluate(
            &c,
            false,
            &EvaluateOptions {
                hypotheses: Some(output),
                name: Some(format!("roundway-{name}")),
                ..EvaluateOptions::default()
            },
        )?;
        recalls[k] = report.scores.recall;
        for (t, r) in &report.per_type {
            per_type.entry(t.clone()).or_default()[k] = r.recall;
        }
    }
    Ok(RoundWay {
        l2r: recalls[0],
        r2l: recalls[1],
        round_way: recalls[2],
        per_type,
    })
}

struct SeedRun {
    seed: u64,
    learning: LearningRun,
    soundness: Soundness,
    round_way: RoundWay,
}

fn seed_experiment(work: &Path, seed: u64) -> fbgec::Result<SeedRun> {
    let start = Instant::now();
    let mut learning = learning_pipeline(work, seed)?;
    eprintln!(
        "seed {seed}: base and dual done in {:.0}s",
        start.elapsed().as_secs_f64()
    );
    for strategy in [Strategy::Back, Strategy::SelfBoost] {
        let s = train(&learning.cfg, false, strategy, Direction::L2R)?;
        learning.summaries.push(s);
    }
    eprintln!(
        "seed {seed}: back and self done in {:.0}s",
        start.elapsed().as_secs_f64()
    );
    let soundness = candidate_soundness(&learning.cfg, &learning.summaries)?;
    let round_way = round_way_experiment(&learning.cfg)?;
    eprintln!(
        "seed {seed}: finished in {:.0}s",
        start.elapsed().as_secs_f64()
    );
    Ok(SeedRun {
        seed,
        learning,
        soundness,
        round_way,
    })
}

fn criterion_3(runs: &[SeedRun]) -> Outcome {
    let checked: usize = runs.iter().map(|r| r.soundness.checked).sum();
    let epochs: usize = runs.iter().map(|r| r.soundness.epochs).sum();
    let violations: Vec<&String> = runs.iter().flat_map(|r| &r.soundness.violations).collect();
    Outcome::new(
        3,
        "sigma-condition soundness over back, self and dual runs",
        violations.is_empty() && checked > 0,
        format!(
            "{checked} stored candidates and {epochs} epochs over seeds {:?}, {} violations{}",
            runs.iter().map(|r| r.seed).collect::<Vec<_>>(),
            violations.len(),
            violations
                .first()
                .map(|v| format!(" (first: {v})"))
                .unwrap_or_default()
        ),
    )
}

fn criterion_6(runs: &[SeedRun]) -> Outcome {
    let base: Vec<f64> = runs.iter().map(|r| r.learning.base.scores.recall).collect();
    let dual: Vec<f64> = runs.iter().map(|r| r.learning.dual.scores.recall).collect();
    let (mb, md) = (median(base.clone()), median(dual.clone()));
    let types: Vec<&String> = runs[0].learning.base.per_type.keys().collect();
    let mut rows = Vec::new();
    let mut non_decreasing = 0;
    for t in &types {
        let b = median(
            runs.iter()
                .map(|r| r.learning.base.per_type.get(*t).map_or(0.0, |x| x.recall))
                .collect(),
        );
        let d = median(
            runs.iter()
                .map(|r| r.learning.dual.per_type.get(*t).map_or(0.0, |x| x.recall))
                .collect(),
        );
        if d >= b {
            non_decreasing += 1;
        }
        rows.push(format!("{t} {b:.1}->{d:.1}"));
    }
    let pass = md > mb && 2 * non_decreasing >= types.len();
    Outcome::new(
        6,
        "dual-boost recall exceeds base recall",
        pass,
        format!(
            "recall base {:?} median {mb:.2}, dual {:?} median {md:.2}; {non_decreasing}/{} types non-decreasing [{}]",
            base.iter().map(|x| round2(*x)).collect::<Vec<_>>(),
            dual.iter().map(|x| round2(*x)).collect::<Vec<_>>(),
            types.len(),
            rows.join(", ")
        ),
    )
}

fn criterion_7(runs: &[SeedRun]) -> Outcome {
    let fx = Fixture::new();
    let (r2l, l2r) = fx.round_way_pair();
    let fixture = correct_round_way(
        &r2l,
        &l2r,
        &fx.enc("She come to park ."),
        &InferenceConfig::default(),
        &fx.lm,
    )
    .map(|(out, _)| fx.dec(&out))
    .unwrap_or_else(|e| format!("error: {e}"));
    let singles_ok = fx.dec(&correct_single(
        &r2l,
        &fx.enc("She come to park ."),
        &InferenceConfig::default(),
        &fx.lm,
    )) == "She come to the park ."
        && fx.dec(&correct_single(
            &l2r,
            &fx.enc("She come to park ."),
            &InferenceConfig::default(),
            &fx.lm,
        )) == "She comes to park .";
    let gaps: Vec<f64> = runs
        .iter()
        .map(|r| r.round_way.round_way - r.round_way.l2r.max(r.round_way.r2l))
        .collect();
    let gap = median(gaps.clone());
    let per_seed: Vec<String> = runs
        .iter()
        .map(|r| {
            let w = &r.round_way;
            let types: Vec<String> = w
                .per_type
                .iter()
                .map(|(t, v)| format!("{t} {:.1}/{:.1}/{:.1}", v[0], v[1], v[2]))
                .collect();
            format!(
                "seed {}: l2r {:.2} r2l {:.2} round-way {:.2} ({})",
                r.seed,
                w.l2r,
                w.r2l,
                w.round_way,
                types.join(", ")
            )
        })
        .collect();
    let pass = gap >= -0.5 && fixture == "She comes to the park ." && singles_ok;
    Outcome::new(
        7,
        "round-way recall and the two-error fixture",
        pass,
        format!(
            "median round-way minus best single {gap:.2} (per seed {:?}); fixture -> {fixture:?}; {}",
            gaps.iter().map(|g| round2(*g)).collect::<Vec<_>>(),
            per_seed.join("; ")
        ),
    )
}

fn criterion_9(first: &Path, rerun: fbgec::Result<LearningRun>) -> Outcome {
    const TITLE: &str = "rerun yields byte-identical reports";
    let rerun = match rerun {
        Ok(r) => r,
        Err(e) => return Outcome::failed(9, TITLE, e),
    };
    let (a, b) = (
        Workspace::new(first),
        Workspace::new(&rerun.cfg.paths.work_dir),
    );
    let mut files = Vec::new();
    for name in [
        "base-single",
        "dual-single",
        "train-base-l2r",
        "train-dual-l2r",
    ] {
        files.push(a.report(name));
        files.push(b.report(name));
    }
    for name in ["base-single", "dual-single"] {
        files.push(a.report_table(name));
        files.push(b.report_table(name));
    }
    let mut differing = Vec::new();
    for pair in files.chunks(2) {
        let (x, y) = (std::fs::read(&pair[0]), std::fs::read(&pair[1]));
        match (x, y) {
            (Ok(x), Ok(y)) if x == y => {}
            _ => differing.push(a.display(&pair[0])),
        }
    }
    Outcome::new(
        9,
        TITLE,
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} report files identical for seed 1", files.len() / 2)
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

fn print(o: &Outcome) {
    println!(
        "criterion {} [{}] {}: {}",
        o.id,
        if o.pass { "PASS" } else { "FAIL" },
        o.title,
        o.detail
    );
}

fn main() -> ExitCode {
    let start = Instant::now();
    let root = tempfile::tempdir().expect("temp dir");
    let seeds = [1u64, 2, 3];
    let (quick, runs, rerun) = thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let dir = root.path().join(format!("seed-{seed}"));
                scope.spawn(move || seed_experiment(&dir, seed))
            })
            .collect();
        let rerun_dir = root.path().join("seed-1-rerun");
        let rerun = scope.spawn(move || learning_pipeline(&rerun_dir, 1));

        let mut quick = vec![criterion_1(), criterion_2()];
        quick.push(criterion_4(&root.path().join("gradcheck")));
        quick.push(criterion_5());
        quick.push(criterion_8());
        for o in &quick {
            print(o);
        }
        let runs: Vec<fbgec::Result<SeedRun>> = handles
            .into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|_| {
                    Err(fbgec::Error::Config("experiment thread panicked".into()))
                })
            })
            .collect();
        let rerun = rerun
            .join()
            .unwrap_or_else(|_| Err(fbgec::Error::Config("rerun thread panicked".into())));
        (quick, runs, rerun)
    });
    let mut outcomes = quick;
    let mut ok_runs = Vec::new();
    let mut errors = Vec::new();
    for r in runs {
        match r {
            Ok(r) => ok_runs.push(r),
            Err(e) => errors.push(e.to_string()),
        }
    }
    if errors.is_empty() {
        outcomes.push(criterion_3(&ok_runs));
        outcomes.push(criterion_6(&ok_runs));
        outcomes.push(criterion_7(&ok_runs));
        outcomes.push(criterion_9(&root.path().join("seed-1"), rerun));
    } else {
        let msg = errors.join("; ");
        outcomes.push(Outcome::failed(
            3,
            "sigma-condition soundness over back, self and dual runs",
            &msg,
        ));
        outcomes.push(Outcome::failed(
            6,
            "dual-boost recall exceeds base recall",
            &msg,
        ));
        outcomes.push(Outcome::failed(
            7,
            "round-way recall and the two-error fixture",
            &msg,
        ));
        outcomes.push(Outcome::failed(
            9,
            "rerun yields byte-identical reports",
            &msg,
        ));
    }
    for o in outcomes.iter().filter(|o| matches!(o.id, 3 | 6 | 7 | 9)) {
        print(o);
    }
    outcomes.sort_by_key(|o| o.id);
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!(
        "acceptance: {passed}/{} criteria passed in {:.0}s",
        outcomes.len(),
        start.elapsed().as_secs_f64()
    );
    if passed == outcomes.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
