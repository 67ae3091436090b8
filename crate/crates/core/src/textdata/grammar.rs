use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lexicon::*;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrammarConfig {
    /// Probability of a trailing manner adverb.
    pub adverb_prob: f64,
}

impl Default for GrammarConfig {
    fn default() -> Self {
        Self { adverb_prob: 0.3 }
    }
}

/// A small probabilistic grammar of clean English sentences.
///
/// Every choice that an injected error can destroy is recoverable from context: articles
/// follow the noun (`a`/`an` by initial vowel, `the` before places and things), verbs agree
/// with the subject at the start of the sentence, prepositions are fixed by the verb and
/// plural nouns only appear after `two`/`many`.
#[derive(Clone, Debug, Default)]
pub struct Grammar {
    pub config: GrammarConfig,
}

fn indefinite(noun: &str) -> &'static str {
    if noun.starts_with(['a', 'e', 'i', 'o', 'u']) {
        "an"
    } else {
        "a"
    }
}

impl Grammar {
    pub fn new(config: GrammarConfig) -> Self {
        Self { config }
    }

    pub fn sentence<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<String> {
        let singular = rng.gen_bool(0.5);
        let subject = if singular {
            *SINGULAR_SUBJECTS.choose(rng).unwrap()
        } else {
            *PLURAL_SUBJECTS.choose(rng).unwrap()
        };
        let agree = |v: &VerbForms| if singular { v.third } else { v.base };
        let mut words: Vec<&str> = subject.split(' ').collect();
        match rng.gen_range(0..5) {
            0 => {
                let verb = MOTION_VERBS.choose(rng).unwrap();
                let place = PLACES.choose(rng).unwrap().0;
                words.extend([agree(verb), "to", "the", place]);
            }
            1 => {
                let verb = TRANSITIVE_VERBS.choose(rng).unwrap();
                words.push(agree(verb));
                self.object(rng, &mut words);
            }
            2 => {
                let (verb, prep) = PREPOSITIONAL_VERBS.choose(rng).unwrap();
                let thing = THINGS.choose(rng).unwrap().0;
                words.extend([agree(verb), *prep, "the", thing]);
            }
            3 => {
                let verb = MOTION_VERBS.choose(rng).unwrap();
                let place = PLACES.choose(rng).unwrap().0;
                words.extend([agree(&WANT), "to", verb.base, "to", "the", place]);
            }
            _ => {
                let modal = if rng.gen_bool(0.5) { "can" } else { "will" };
                let verb = TRANSITIVE_VERBS.choose(rng).unwrap();
                words.extend([modal, verb.base]);
                self.object(rng, &mut words);
            }
        }
        if rng.gen_bool(self.config.adverb_prob.clamp(0.0, 1.0)) {
            words.push(ADVERBS.choose(rng).unwrap().1);
        }
        words.push(".");
        words.into_iter().map(str::to_string).collect()
    }

    fn object<R: Rng + ?Sized>(&self, rng: &mut R, words: &mut Vec<&str>) {
        let (sg, pl) = *OBJECTS.choose(rng).unwrap();
        match rng.gen_range(0..3) {
            0 => words.extend([indefinite(sg), sg]),
            1 => words.extend(["two", pl]),
            _ => words.extend(["many", pl]),
        }
    }
}
