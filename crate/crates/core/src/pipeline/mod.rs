//! Stage commands behind the `fbgec` CLI: each reads its inputs from the work directory,
//! refuses to overwrite existing artifacts unless forced, and writes a manifest with the
//! config hash, seed and content hashes of its inputs and outputs.

mod config;
mod stages;
mod workspace;

pub use config::{
    ExperimentConfig, InferenceMode, LmConfig, PathsConfig, SynthConfig, VocabConfig,
};
pub use stages::{
    correct, evaluate, gradcheck, synthesize, train, train_lm, CorrectOptions, EvaluateOptions,
    GradcheckOptions, GradcheckSummary, SynthSummary, TrainSummary,
};
pub use workspace::{Manifest, Workspace};
