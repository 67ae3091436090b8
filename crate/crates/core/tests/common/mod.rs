#![allow(dead_code)]

use fbgec::ngram_lm::{train_lm, NGramModel, Smoothing};
use fbgec::seq2seq::{Corrector, Direction, Hypothesis};
use fbgec::textdata::{TokenId, TokenSeq, Vocabulary};

pub fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// A deterministic corrector that returns one hypothesis produced by a rewrite function.
pub struct RuleCorrector<F> {
    pub direction: Direction,
    pub rule: F,
}

impl<F: Fn(&[TokenId]) -> TokenSeq + Send + Sync> Corrector for RuleCorrector<F> {
    fn direction(&self) -> Direction {
        self.direction
    }

    fn nbest(
        &self,
        input: &[TokenId],
        _beam: usize,
        _n: usize,
        _max_len: usize,
    ) -> Vec<Hypothesis> {
        vec![Hypothesis {
            tokens: (self.rule)(input),
            log_prob: 0.0,
            score: 0.0,
            complete: true,
        }]
    }

    fn score(&self, input: &[TokenId], output: &[TokenId]) -> f64 {
        if (self.rule)(input) == output {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }
}

pub fn identity() -> RuleCorrector<impl Fn(&[TokenId]) -> TokenSeq + Send + Sync> {
    RuleCorrector {
        direction: Direction::L2R,
        rule: |x: &[TokenId]| x.to_vec(),
    }
}

const CLEAN: &[&str] = &[
    "She comes to the park .",
    "He goes to the store .",
    "She walks to the school .",
    "He comes to the park .",
    "She goes to the store .",
    "He walks to the park .",
    "They come to the park .",
    "They go to the school .",
    "We walk to the store .",
    "I come to the park .",
];

/// Vocabulary, LM and surfaces for the article/agreement fixture world.
pub struct Fixture {
    pub vocab: Vocabulary,
    pub lm: NGramModel,
}

impl Fixture {
    pub fn new() -> Self {
        let mut surfaces: Vec<String> = CLEAN.iter().flat_map(|s| words(s)).collect();
        surfaces.sort();
        surfaces.dedup();
        let vocab = Vocabulary::from_surfaces(surfaces).unwrap();
        let corpus: Vec<TokenSeq> = CLEAN.iter().map(|s| vocab.encode(&words(s))).collect();
        let lm = train_lm(&corpus, 3, Smoothing::default(), &vocab).unwrap();
        Fixture { vocab, lm }
    }

    pub fn enc(&self, s: &str) -> TokenSeq {
        self.vocab.encode(&words(s))
    }

    pub fn dec(&self, x: &[TokenId]) -> String {
        self.vocab.decode_line(x)
    }

    pub fn f(&self, x: &[TokenId]) -> f64 {
        self.lm.fluency(x).unwrap().f
    }

    /// Scanning right to left, inserts "the" before the first bare noun.
    pub fn fix_one_article(&self, x: &[TokenId]) -> Option<TokenSeq> {
        let the = self.vocab.id("the");
        let nouns = ["park", "store", "school"].map(|w| self.vocab.id(w));
        (0..x.len()).rev().find_map(|i| {
            let bare = nouns.contains(&x[i]) && (i == 0 || x[i - 1] != the);
            bare.then(|| {
                let mut y = x.to_vec();
                y.insert(i, the);
                y
            })
        })
    }

    /// Scanning left to right, inflects the first base verb that follows "She" or "He".
    pub fn fix_one_agreement(&self, x: &[TokenId]) -> Option<TokenSeq> {
        let subjects = ["She", "He"].map(|w| self.vocab.id(w));
        let forms = [("come", "comes"), ("go", "goes"), ("walk", "walks")]
            .map(|(a, b)| (self.vocab.id(a), self.vocab.id(b)));
        (1..x.len()).find_map(|i| {
            let (_, third) = forms.iter().find(|(base, _)| *base == x[i])?;
            subjects.contains(&x[i - 1]).then(|| {
                let mut y = x.to_vec();
                y[i] = *third;
                y
            })
        })
    }

    pub fn fix_articles(&self, x: &[TokenId]) -> TokenSeq {
        let mut y = x.to_vec();
        while let Some(z) = self.fix_one_article(&y) {
            y = z;
        }
        y
    }

    pub fn fix_agreement(&self, x: &[TokenId]) -> TokenSeq {
        let mut y = x.to_vec();
        while let Some(z) = self.fix_one_agreement(&y) {
            y = z;
        }
        y
    }

    /// Repairs exactly one error per call, agreement first.
    pub fn fix_one(&self, x: &[TokenId]) -> TokenSeq {
        self.fix_one_agreement(x)
            .or_else(|| self.fix_one_article(x))
            .unwrap_or_else(|| x.to_vec())
    }

    /// Right-to-left article fixer and left-to-right agreement fixer.
    #[allow(clippy::type_complexity)]
    pub fn round_way_pair(
        &self,
    ) -> (
        RuleCorrector<impl Fn(&[TokenId]) -> TokenSeq + Send + Sync + '_>,
        RuleCorrector<impl Fn(&[TokenId]) -> TokenSeq + Send + Sync + '_>,
    ) {
        (
            RuleCorrector {
                direction: Direction::R2L,
                rule: move |x: &[TokenId]| self.fix_articles(x),
            },
            RuleCorrector {
                direction: Direction::L2R,
                rule: move |x: &[TokenId]| self.fix_agreement(x),
            },
        )
    }

    pub fn one_per_pass(
        &self,
    ) -> RuleCorrector<impl Fn(&[TokenId]) -> TokenSeq + Send + Sync + '_> {
        RuleCorrector {
            direction: Direction::L2R,
            rule: move |x: &[TokenId]| self.fix_one(x),
        }
    }
}

/// A model that always maps a sentence to the next one in a chain of increasing fluency.
pub fn ladder(fx: &Fixture) -> Vec<TokenSeq> {
    let mut chain: Vec<TokenSeq> = [
        "park park park park",
        "park the park park",
        "She the park park",
        "She to the park",
        "She to the park .",
        "She goes to park .",
        "She goes to the park",
        "She goes to the park .",
    ]
    .iter()
    .map(|s| fx.enc(s))
    .collect();
    chain.sort_by(|a, b| fx.f(a).total_cmp(&fx.f(b)));
    chain
}
