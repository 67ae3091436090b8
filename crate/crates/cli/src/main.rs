use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use fbgec::boost_learning::Strategy;
use fbgec::pipeline::{self, CorrectOptions, EvaluateOptions, ExperimentConfig, GradcheckOptions};
use fbgec::seq2seq::Direction;

/// Grammatical error correction with fluency boost learning and inference.
#[derive(Parser)]
#[command(name = "fbgec", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML). Defaults apply when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set boost.sigma=1.1`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Shorthand for `--set seed=N`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shorthand for `--set paths.work_dir=DIR`.
    #[arg(long, global = true)]
    work_dir: Option<PathBuf>,
    /// Overwrite existing artifacts.
    #[arg(long, global = true)]
    force: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with labeled injected errors.
    Synthesize,
    /// Build the vocabulary and train the n-gram language model.
    TrainLm,
    /// Train plain correction models.
    Train {
        #[arg(long)]
        direction: Option<Direction>,
    },
    /// Train correction models with a fluency boost strategy.
    BoostTrain {
        /// base, back, self or dual (defaults to the config's `strategy`).
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long)]
        direction: Option<Direction>,
    },
    /// Correct tokenized sentences.
    Correct {
        #[arg(long)]
        strategy: Option<Strategy>,
        /// single, multi or roundway.
        #[arg(long)]
        mode: Option<String>,
        /// One tokenized sentence per line (defaults to the test split).
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write per-sentence JSON-lines traces here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Apply both round-way stages unconditionally.
        #[arg(long)]
        unguarded_roundway: bool,
        /// Run left-to-right before right-to-left in round-way mode.
        #[arg(long)]
        reverse_roundway: bool,
    },
    /// Score hypotheses with M2 P/R/F0.5, GLEU and per-type recall.
    Evaluate {
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        hypotheses: Option<PathBuf>,
        /// Gold corpus: TSV (with optional `.edits.jsonl` sidecar) or `.m2`.
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Tab-separated references per line for GLEU.
        #[arg(long)]
        references: Option<PathBuf>,
        /// Report name under `reports/`.
        #[arg(long)]
        name: Option<String>,
    },
    /// Compare analytic gradients with central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        pairs: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
        /// Fail when the max relative error reaches this value.
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

fn load_config(common: &Common, extra: Vec<String>) -> fbgec::Result<ExperimentConfig> {
    let mut overrides = common.overrides.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(dir) = &common.work_dir {
        overrides.push(format!("paths.work_dir={:?}", dir.display().to_string()));
    }
    overrides.extend(extra);
    ExperimentConfig::load(common.config.as_deref(), &overrides)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let c = &cli.common;
    let force = c.force;
    match cli.command {
        Command::Synthesize => {
            let cfg = load_config(c, vec![])?;
            let s = pipeline::synthesize(&cfg, force)?;
            println!(
                "wrote {} train / {} dev / {} test pairs ({} identity), {} native sentences",
                s.train, s.dev, s.test, s.identity, s.native
            );
        }
        Command::TrainLm => {
            let cfg = load_config(c, vec![])?;
            let lm = pipeline::train_lm(&cfg, force)?;
            println!(
                "trained order-{} LM over {} types",
                lm.order(),
                lm.vocabulary().len()
            );
        }
        Command::Train { direction } => {
            let cfg = load_config(c, vec![])?;
            let summary = pipeline::train(
                &cfg,
                force,
                Strategy::Base,
                direction.unwrap_or(cfg.model.direction),
            )?;
            print_training(&summary);
        }
        Command::BoostTrain {
            strategy,
            direction,
        } => {
            let cfg = load_config(c, vec![])?;
            let strategy = strategy.unwrap_or(cfg.strategy);
            let summary = pipeline::train(
                &cfg,
                force,
                strategy,
                direction.unwrap_or(cfg.model.direction),
            )?;
            print_training(&summary);
        }
        Command::Correct {
            strategy,
            mode,
            input,
            output,
            trace,
            unguarded_roundway,
            reverse_roundway,
        } => {
            let mut extra = selection(strategy, mode);
            if unguarded_roundway {
                extra.push("inference.guarded_round_way=false".into());
            }
            if reverse_roundway {
                extra.push("inference.round_way_order=\"l2r-then-r2l\"".into());
            }
            let cfg = load_config(c, extra)?;
            let path = pipeline::correct(
                &cfg,
                force,
                &CorrectOptions {
                    input,
                    output,
                    trace,
                },
            )?;
            println!("wrote {}", path.display());
        }
        Command::Evaluate {
            strategy,
            mode,
            hypotheses,
            gold,
            references,
            name,
        } => {
            let cfg = load_config(c, selection(strategy, mode))?;
            let opts = EvaluateOptions {
                hypotheses,
                gold,
                references,
                name,
            };
            let report = pipeline::evaluate(&cfg, force, &opts)?;
            print!("{}", report.to_table());
        }
        Command::Gradcheck {
            pairs,
            samples,
            epsilon,
            tolerance,
        } => {
            let cfg = load_config(c, vec![])?;
            let s = pipeline::gradcheck(
                &cfg,
                &GradcheckOptions {
                    pairs,
                    samples,
                    epsilon,
                },
            )?;
            println!(
                "{} parameters, {} pairs, {} checks: max relative error {:.3e}, max absolute error {:.3e}",
                s.parameters, s.pairs, s.checked, s.max_relative_error, s.max_absolute_error
            );
            if s.max_relative_error >= tolerance {
                anyhow::bail!(
                    "gradient check failed: {:.3e} >= {tolerance:.1e}",
                    s.max_relative_error
                );
            }
        }
    }
    Ok(())
}

fn selection(strategy: Option<Strategy>, mode: Option<String>) -> Vec<String> {
    let mut v = Vec::new();
    if let Some(s) = strategy {
        v.push(format!("strategy=\"{s}\""));
    }
    if let Some(m) = mode {
        v.push(format!("mode=\"{m}\""));
    }
    v
}

fn print_training(s: &pipeline::TrainSummary) {
    for (k, stats) in s.members.iter().enumerate() {
        if let Some(last) = stats.last() {
            println!(
                "{}-{} member {k}: {} epochs, final loss {:.4}, candidates {}",
                s.strategy,
                s.direction,
                stats.len(),
                last.corrector_loss,
                last.candidates
            );
        } else {
            println!("{}-{} member {k}: no epochs run", s.strategy, s.direction);
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.common.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli).context("fbgec") {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e);
            let code = e
                .downcast_ref::<fbgec::Error>()
                .map_or(1, fbgec::Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
