use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use rand::Rng;

use crate::metrics::extract_edits;
use crate::{Error, Result};

use super::{ErrorType, LabeledEdit, Lexicon, SentencePair};

/// One corruption rule of the synthetic error generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    ArticleDeletion,
    ArticleSubstitution,
    SubjectVerbAgreement,
    NounNumber,
    VerbForm,
    Preposition,
    WordForm,
    WordOrder,
}

impl Rule {
    pub const ALL: [Rule; 8] = [
        Rule::ArticleDeletion,
        Rule::ArticleSubstitution,
        Rule::SubjectVerbAgreement,
        Rule::NounNumber,
        Rule::VerbForm,
        Rule::Preposition,
        Rule::WordForm,
        Rule::WordOrder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::ArticleDeletion => "article_deletion",
            Rule::ArticleSubstitution => "article_substitution",
            Rule::SubjectVerbAgreement => "subject_verb_agreement",
            Rule::NounNumber => "noun_number",
            Rule::VerbForm => "verb_form",
            Rule::Preposition => "preposition",
            Rule::WordForm => "word_form",
            Rule::WordOrder => "word_order",
        }
    }

    pub fn error_type(self) -> ErrorType {
        match self {
            Rule::ArticleDeletion | Rule::ArticleSubstitution => ErrorType::ArtOrDet,
            Rule::SubjectVerbAgreement => ErrorType::Sva,
            Rule::NounNumber => ErrorType::Nn,
            Rule::VerbForm => ErrorType::Vform,
            Rule::Preposition => ErrorType::Prep,
            Rule::WordForm => ErrorType::Wform,
            Rule::WordOrder => ErrorType::Wo,
        }
    }

    pub fn from_name(name: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.name() == name)
    }
}

/// Per-rule application probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleConfig {
    probs: BTreeMap<Rule, f64>,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self::uniform(0.3)
    }
}

impl RuleConfig {
    pub fn uniform(p: f64) -> Self {
        Self {
            probs: Rule::ALL.iter().map(|&r| (r, p)).collect(),
        }
    }

    /// Only `rule` is active, with probability `p`.
    pub fn only(rule: Rule, p: f64) -> Self {
        Self::uniform(0.0).with(rule, p)
    }

    pub fn with(mut self, rule: Rule, p: f64) -> Self {
        self.probs.insert(rule, p);
        self
    }

    pub fn prob(&self, rule: Rule) -> f64 {
        self.probs.get(&rule).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Rule, f64)> + '_ {
        self.probs.iter().map(|(&r, &p)| (r, p))
    }

    /// Parses `rule_name = probability` lines; `#` starts a comment. Unlisted rules keep
    /// the default probability.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |m: String| Error::config(format!("rule config line {}: {m}", i + 1));
            let (k, v) = line
                .split_once('=')
                .or_else(|| line.split_once(char::is_whitespace))
                .ok_or_else(|| bad(format!("expected `name = probability`, got {line:?}")))?;
            let rule = Rule::from_name(k.trim())
                .ok_or_else(|| bad(format!("unknown rule {:?}", k.trim())))?;
            let p: f64 = v
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad probability {:?}", v.trim())))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(bad(format!("probability {p} outside [0, 1]")));
            }
            cfg.probs.insert(rule, p);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(Error::io(format!("read {}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        self.iter()
            .map(|(r, p)| format!("{} = {p}\n", r.name()))
            .collect()
    }
}

struct Corruption {
    begin: usize,
    end: usize,
    tokens: Vec<String>,
    kind: ErrorType,
}

fn default_lexicon() -> &'static Lexicon {
    static LEXICON: OnceLock<Lexicon> = OnceLock::new();
    LEXICON.get_or_init(Lexicon::english)
}

/// Corrupts a clean sentence with the built-in English lexicon.
///
/// Returns `(corrupted, clean)` with edits that turn the corrupted side back into the
/// clean one, each tagged with the type of the rule that produced it.
pub fn inject_errors<R: Rng + ?Sized>(
    sentence: &[String],
    rules: &RuleConfig,
    rng: &mut R,
) -> SentencePair {
    inject_with(sentence, rules, default_lexicon(), rng)
}

pub(crate) fn inject_with<R: Rng + ?Sized>(
    sentence: &[String],
    rules: &RuleConfig,
    lexicon: &Lexicon,
    rng: &mut R,
) -> SentencePair {
    let mut applied: Vec<Corruption> = Vec::new();
    for rule in Rule::ALL {
        let p = rules.prob(rule);
        if p <= 0.0 || !rng.gen_bool(p.min(1.0)) {
            continue;
        }
        let options: Vec<_> = candidates(rule, sentence, lexicon)
            .into_iter()
            .filter(|(b, e, _)| applied.iter().all(|c| *e < c.begin || *b > c.end))
            .collect();
        if options.is_empty() {
            continue;
        }
        let (begin, end, tokens) = options[rng.gen_range(0..options.len())].clone();
        let at = applied.partition_point(|c| c.begin < begin);
        applied.insert(
            at,
            Corruption {
                begin,
                end,
                tokens,
                kind: rule.error_type(),
            },
        );
        // Keep only corruptions whose edit the aligner recovers exactly.
        if build(sentence, &applied).is_none() {
            applied.remove(at);
        }
    }
    build(sentence, &applied).expect("every kept corruption was verified")
}

fn build(clean: &[String], corruptions: &[Corruption]) -> Option<SentencePair> {
    let mut source = Vec::with_capacity(clean.len() + 2);
    let mut edits = Vec::with_capacity(corruptions.len());
    let mut cursor = 0;
    for c in corruptions {
        source.extend_from_slice(&clean[cursor..c.begin]);
        let begin = source.len();
        source.extend_from_slice(&c.tokens);
        edits.push(LabeledEdit {
            begin,
            end: source.len(),
            replacement: clean[c.begin..c.end].to_vec(),
            kind: c.kind.clone(),
        });
        cursor = c.end;
    }
    source.extend_from_slice(&clean[cursor..]);
    let recovered = extract_edits(&source, clean);
    let consistent = recovered.len() == edits.len()
        && recovered
            .iter()
            .zip(&edits)
            .all(|(r, e)| r.begin == e.begin && r.end == e.end && r.replacement == e.replacement);
    consistent.then(|| SentencePair {
        source,
        target: clean.to_vec(),
        edits: Some(edits),
    })
}

/// All `(begin, end, corrupted tokens)` options for one rule on a clean sentence.
fn candidates(rule: Rule, s: &[String], lex: &Lexicon) -> Vec<(usize, usize, Vec<String>)> {
    let mut out = Vec::new();
    let one = |i: usize, w: &str| (i, i + 1, vec![w.to_string()]);
    for (i, w) in s.iter().enumerate() {
        let w = w.as_str();
        match rule {
            Rule::ArticleDeletion if lex.is_article(w) => out.push((i, i + 1, Vec::new())),
            Rule::ArticleSubstitution if lex.is_article(w) => {
                out.extend(lex.articles.iter().filter(|a| *a != w).map(|a| one(i, a)))
            }
            Rule::SubjectVerbAgreement => {
                if let Some(flip) = lex.agreement.get(w) {
                    if i > 0 && lex.is_subject_head(&s[i - 1]) {
                        out.push(one(i, flip));
                    }
                }
            }
            Rule::NounNumber => {
                if let Some(flip) = lex.noun_number.get(w) {
                    out.push(one(i, flip));
                }
            }
            Rule::VerbForm => {
                if let Some((ing, past)) = lex.base_forms.get(w) {
                    if i > 0 && lex.is_verb_trigger(&s[i - 1]) {
                        out.extend(
                            [ing, past]
                                .into_iter()
                                .filter(|f| *f != w)
                                .map(|f| one(i, f)),
                        );
                    }
                }
            }
            Rule::Preposition if lex.is_preposition(w) => {
                // "to" directly before a verb is an infinitive marker, not a preposition.
                let infinitive = s.get(i + 1).is_some_and(|n| lex.base_forms.contains_key(n));
                if !infinitive {
                    out.extend(
                        lex.prepositions
                            .iter()
                            .filter(|p| *p != w)
                            .map(|p| one(i, p)),
                    );
                }
            }
            Rule::WordForm => {
                if let Some(flip) = lex.word_form.get(w) {
                    out.push(one(i, flip));
                }
            }
            Rule::WordOrder if i + 2 < s.len() && s[i] != s[i + 1] => {
                out.push((i, i + 2, vec![s[i + 1].clone(), s[i].clone()]));
            }
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::seed::rng_for;
    use crate::textdata::{apply_edits, Grammar};

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn forced_article_deletion() {
        let rules = RuleConfig::only(Rule::ArticleDeletion, 1.0);
        let pair = inject_errors(
            &toks("She comes to the park ."),
            &rules,
            &mut rng_for(1, "t"),
        );
        assert_eq!(pair.source, toks("She comes to park ."));
        assert_eq!(pair.target, toks("She comes to the park ."));
        let edits = pair.edits.unwrap();
        assert_eq!(edits.len(), 1);
        assert_eq!(edits[0].kind, ErrorType::ArtOrDet);
        assert_eq!((edits[0].begin, edits[0].end), (3, 3));
    }

    #[test]
    fn zero_probabilities_give_identity() {
        let s = toks("She comes to the park .");
        let pair = inject_errors(&s, &RuleConfig::uniform(0.0), &mut rng_for(1, "t"));
        assert_eq!(pair.source, s);
        assert_eq!(pair.target, s);
        assert!(pair.edits.unwrap().is_empty());
    }

    #[test]
    fn same_seed_same_output() {
        let s = toks("My sister wants to go to the library quickly .");
        let rules = RuleConfig::uniform(0.7);
        let a = inject_errors(&s, &rules, &mut rng_for(42, "t"));
        let b = inject_errors(&s, &rules, &mut rng_for(42, "t"));
        assert_eq!(a, b);
    }

    #[test]
    fn agreement_flip_only_after_subject() {
        let rules = RuleConfig::only(Rule::SubjectVerbAgreement, 1.0);
        let pair = inject_errors(
            &toks("She wants to go to the park ."),
            &rules,
            &mut rng_for(3, "t"),
        );
        assert_eq!(pair.source, toks("She want to go to the park ."));
        let pair = inject_errors(&toks("She can read a book ."), &rules, &mut rng_for(3, "t"));
        assert!(pair.edits.unwrap().is_empty());
    }

    #[test]
    fn rule_config_parsing() {
        let cfg =
            RuleConfig::parse("# probabilities\narticle_deletion = 0.5\nword_order=0\n").unwrap();
        assert_eq!(cfg.prob(Rule::ArticleDeletion), 0.5);
        assert_eq!(cfg.prob(Rule::WordOrder), 0.0);
        assert_eq!(cfg.prob(Rule::Preposition), 0.3);
        assert!(RuleConfig::parse("nonsense = 0.1").is_err());
        assert!(RuleConfig::parse("word_order = 1.5").is_err());
        assert!(RuleConfig::parse("word_order").is_err());
        assert_eq!(RuleConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn edits_reproduce_target_and_touch_nothing_else(seed in any::<u64>(), p in 0.0f64..1.0) {
            let mut rng = rng_for(seed, "sentence");
            let clean = Grammar::default().sentence(&mut rng);
            let pair = inject_errors(&clean, &RuleConfig::uniform(p), &mut rng);
            let edits = pair.edits.clone().unwrap();
            prop_assert_eq!(apply_edits(&pair.source, &edits).unwrap(), clean.clone());
            // Outside the edit spans, source tokens are clean tokens in order.
            let mut cursor = 0;
            let mut out = 0;
            for e in &edits {
                let untouched = e.begin - cursor;
                prop_assert_eq!(&pair.source[cursor..e.begin], &clean[out..out + untouched]);
                out += untouched + e.replacement.len();
                cursor = e.end;
            }
            prop_assert_eq!(&pair.source[cursor..], &clean[out..]);
        }
    }
}
