//! Grammatical error correction with fluency-boost learning and inference.
//!
//! The crate is organised bottom-up:
//!
//! - [`textdata`]: tokenization, vocabularies, corpus I/O and synthetic error injection
//! - [`ngram_lm`]: smoothed n-gram language model, cross entropy and fluency scores
//! - [`seq2seq`]: a small attention encoder-decoder with beam search and ensembles
//! - [`boost_learning`]: disfluency candidates and the back/self/dual boost training loops
//! - [`boost_inference`]: re-ranking, multi-round and round-way correction
//! - [`metrics`]: edit extraction, M2 precision/recall/F0.5, GLEU and per-type recall
//! - [`pipeline`]: config files, artifacts, manifests and the stage commands used by the CLI

pub mod binio;
pub mod boost_inference;
pub mod boost_learning;
pub mod error;
pub mod metrics;
pub mod ngram_lm;
pub mod pipeline;
pub mod seed;
pub mod seq2seq;
pub mod textdata;

pub use error::{Error, Result};
