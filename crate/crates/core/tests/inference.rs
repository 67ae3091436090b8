mod common;

use common::{identity, Fixture, RuleCorrector};
use fbgec::boost_inference::{
    correct_multi_round, correct_round_way, correct_single, InferenceConfig, Stage,
};
use fbgec::seq2seq::Direction;
use fbgec::textdata::{TokenId, TokenSeq};
use fbgec::Error;
use proptest::prelude::*;

fn cfg() -> InferenceConfig {
    InferenceConfig::default()
}

#[test]
fn fixture_round_way_corrects_both_errors() {
    let fx = Fixture::new();
    let (r2l, l2r) = fx.round_way_pair();
    let x = fx.enc("She come to park .");
    let (out, trace) = correct_round_way(&r2l, &l2r, &x, &cfg(), &fx.lm).unwrap();
    assert_eq!(fx.dec(&out), "She comes to the park .");
    let stages: Vec<(Stage, bool)> = trace.steps.iter().map(|s| (s.stage, s.accepted)).collect();
    assert_eq!(stages, vec![(Stage::R2l, true), (Stage::L2r, true)]);
    assert_eq!(fx.dec(&trace.steps[0].output), "She come to the park .");
}

#[test]
fn single_direction_fixers_fix_only_their_type() {
    let fx = Fixture::new();
    let (r2l, l2r) = fx.round_way_pair();
    let x = fx.enc("She come to park .");
    assert_eq!(
        fx.dec(&correct_single(&r2l, &x, &cfg(), &fx.lm)),
        "She come to the park ."
    );
    assert_eq!(
        fx.dec(&correct_single(&l2r, &x, &cfg(), &fx.lm)),
        "She comes to park ."
    );
}

#[test]
fn round_way_with_identity_models_rejects_both_stages() {
    let fx = Fixture::new();
    let r2l = RuleCorrector {
        direction: Direction::R2L,
        rule: |x: &[TokenId]| x.to_vec(),
    };
    let x = fx.enc("She come to park .");
    let (out, trace) = correct_round_way(&r2l, &identity(), &x, &cfg(), &fx.lm).unwrap();
    assert_eq!(out, x);
    assert_eq!(trace.steps.len(), 2);
    assert!(trace.steps.iter().all(|s| !s.accepted));
}

#[test]
fn round_way_checks_directions() {
    let fx = Fixture::new();
    let (r2l, l2r) = fx.round_way_pair();
    let x = fx.enc("She come to park .");
    assert!(matches!(
        correct_round_way(&l2r, &l2r, &x, &cfg(), &fx.lm),
        Err(Error::Direction(_))
    ));
    assert!(matches!(
        correct_round_way(&r2l, &r2l, &x, &cfg(), &fx.lm),
        Err(Error::Direction(_))
    ));
}

#[test]
fn unguarded_round_way_applies_a_harmful_stage() {
    let fx = Fixture::new();
    let the = fx.vocab.id("the");
    let harmful = RuleCorrector {
        direction: Direction::R2L,
        rule: move |x: &[TokenId]| {
            x.iter()
                .copied()
                .filter(|&t| t != the)
                .collect::<TokenSeq>()
        },
    };
    let x = fx.enc("She comes to the park .");
    let guarded = correct_round_way(&harmful, &identity(), &x, &cfg(), &fx.lm)
        .unwrap()
        .0;
    assert_eq!(guarded, x);
    let loose = InferenceConfig {
        guarded_round_way: false,
        ..cfg()
    };
    let unguarded = correct_round_way(&harmful, &identity(), &x, &loose, &fx.lm)
        .unwrap()
        .0;
    assert_eq!(fx.dec(&unguarded), "She comes to park .");
}

#[test]
fn two_errors_take_two_accepted_rounds() {
    let fx = Fixture::new();
    let model = fx.one_per_pass();
    let x = fx.enc("She come to park .");
    let (out, trace) = correct_multi_round(&model, &x, &cfg(), &fx.lm);
    assert_eq!(fx.dec(&out), "She comes to the park .");
    assert_eq!(trace.accepted_rounds(), 2);
    assert_eq!(trace.steps.len(), 3);
    assert!(!trace.steps[2].accepted);
    let fs: Vec<f64> = std::iter::once(fx.f(&x))
        .chain(trace.steps.iter().filter(|s| s.accepted).map(|s| s.f_after))
        .collect();
    assert!(fs.windows(2).all(|w| w[1] > w[0]), "{fs:?}");
}

#[test]
fn identity_model_stops_after_one_rejected_round() {
    let fx = Fixture::new();
    let x = fx.enc("She come to park .");
    let (out, trace) = correct_multi_round(&identity(), &x, &cfg(), &fx.lm);
    assert_eq!(out, x);
    assert_eq!(trace.steps.len(), 1);
    assert!(!trace.steps[0].accepted);
}

#[test]
fn fixed_point_of_single_round_is_fixed_for_multi_round() {
    let fx = Fixture::new();
    let model = fx.one_per_pass();
    let x = fx.enc("She comes to the park .");
    assert_eq!(correct_single(&model, &x, &cfg(), &fx.lm), x);
    assert_eq!(correct_multi_round(&model, &x, &cfg(), &fx.lm).0, x);
}

#[test]
fn max_rounds_one_is_a_guarded_single_round() {
    let fx = Fixture::new();
    let model = fx.one_per_pass();
    let once = InferenceConfig {
        max_rounds: 1,
        ..cfg()
    };
    let x = fx.enc("She come to park .");
    let (out, trace) = correct_multi_round(&model, &x, &once, &fx.lm);
    assert_eq!(out, correct_single(&model, &x, &once, &fx.lm));
    assert_eq!(trace.steps.len(), 1);
}

#[test]
fn rounds_never_exceed_the_cap() {
    let fx = Fixture::new();
    let chain = common::ladder(&fx);
    let next = {
        let chain = chain.clone();
        move |x: &[TokenId]| match chain.iter().position(|c| c == x) {
            Some(i) if i + 1 < chain.len() => chain[i + 1].clone(),
            _ => x.to_vec(),
        }
    };
    let model = RuleCorrector {
        direction: Direction::L2R,
        rule: next,
    };
    for max_rounds in 1..=6 {
        let c = InferenceConfig {
            max_rounds,
            ..cfg()
        };
        let (_, trace) = correct_multi_round(&model, &chain[0], &c, &fx.lm);
        assert!(trace.steps.len() <= max_rounds);
        let fs: Vec<f64> = trace
            .steps
            .iter()
            .filter(|s| s.accepted)
            .map(|s| s.f_after)
            .collect();
        assert!(fs.windows(2).all(|w| w[1] > w[0]));
    }
}

proptest! {
    #[test]
    fn accepted_fluency_strictly_increases(ids in proptest::collection::vec(4u32..20, 1..10), rounds in 1usize..6) {
        let fx = Fixture::new();
        let model = fx.one_per_pass();
        let ids: TokenSeq = ids.into_iter().filter(|&i| (i as usize) < fx.vocab.len()).collect();
        prop_assume!(!ids.is_empty());
        let c = InferenceConfig { max_rounds: rounds, ..cfg() };
        let (out, trace) = correct_multi_round(&model, &ids, &c, &fx.lm);
        prop_assert!(trace.steps.len() <= rounds);
        let mut f = fx.f(&ids);
        for s in trace.steps.iter().filter(|s| s.accepted) {
            prop_assert!(s.f_after > f);
            f = s.f_after;
        }
        prop_assert!(fx.f(&out) >= fx.f(&ids));
        let (rw, _) = correct_round_way(&fx.round_way_pair().0, &fx.round_way_pair().1, &ids, &cfg(), &fx.lm).unwrap();
        prop_assert!(fx.f(&rw) >= fx.f(&ids));
    }
}
