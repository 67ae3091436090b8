//! Analytic vs central-difference gradients of the per-pair loss.

use rand::seq::index::sample;

use super::model::CorrectionModel;
use crate::seed::rng_for;
use crate::textdata::{SentencePair, TokenId};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
}

/// Relative error `|a - n| / max(|a|, |n|, floor)`; the floor keeps near-zero gradients
/// from turning round-off into unbounded relative error.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-5;

/// Compares the analytic gradient against `(L(θ+ε) - L(θ-ε)) / 2ε` on up to `samples`
/// parameters drawn with `seed`. Dropout is off.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn grad_check(
    model: &CorrectionModel,
    pair: &SentencePair<TokenId>,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    if pair.target.is_empty() || pair.source.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(epsilon > 0.0) {
        return Err(Error::config("epsilon must be positive"));
    }
    let target = model.oriented(&pair.target);
    let mut grad = vec![0.0; model.num_params()];
    model.pair_loss(&pair.source, &target, Some(&mut grad), None);
    let mut rng = rng_for(seed, "gradcheck");
    let n = model.num_params();
    let idx = sample(&mut rng, n, samples.min(n));
    let mut probe = model.clone();
    let mut report = GradCheckReport {
        checked: 0,
        max_relative_error: 0.0,
        max_absolute_error: 0.0,
    };
    for i in idx.iter() {
        let orig = probe.params[i];
        probe.params[i] = orig + epsilon;
        let plus = probe.pair_loss(&pair.source, &target, None, None);
        probe.params[i] = orig - epsilon;
        let minus = probe.pair_loss(&pair.source, &target, None, None);
        probe.params[i] = orig;
        let numeric = (plus - minus) / (2.0 * epsilon);
        let abs = (numeric - grad[i]).abs();
        let rel = abs / grad[i].abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR);
        report.checked += 1;
        report.max_absolute_error = report.max_absolute_error.max(abs);
        report.max_relative_error = report.max_relative_error.max(rel);
    }
    Ok(report)
}
