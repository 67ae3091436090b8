use std::collections::HashMap;

/// Inflection table of one verb.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerbForms {
    pub base: &'static str,
    pub third: &'static str,
    pub ing: &'static str,
    pub past: &'static str,
}

const fn v(
    base: &'static str,
    third: &'static str,
    ing: &'static str,
    past: &'static str,
) -> VerbForms {
    VerbForms {
        base,
        third,
        ing,
        past,
    }
}

pub(crate) const MOTION_VERBS: [VerbForms; 5] = [
    v("come", "comes", "coming", "came"),
    v("go", "goes", "going", "went"),
    v("walk", "walks", "walking", "walked"),
    v("run", "runs", "running", "ran"),
    v("drive", "drives", "driving", "drove"),
];

pub(crate) const TRANSITIVE_VERBS: [VerbForms; 8] = [
    v("read", "reads", "reading", "read"),
    v("eat", "eats", "eating", "ate"),
    v("buy", "buys", "buying", "bought"),
    v("see", "sees", "seeing", "saw"),
    v("like", "likes", "liking", "liked"),
    v("need", "needs", "needing", "needed"),
    v("find", "finds", "finding", "found"),
    v("carry", "carries", "carrying", "carried"),
];

/// Verbs with a fixed preposition.
pub(crate) const PREPOSITIONAL_VERBS: [(VerbForms, &str); 5] = [
    (v("look", "looks", "looking", "looked"), "at"),
    (v("listen", "listens", "listening", "listened"), "to"),
    (v("wait", "waits", "waiting", "waited"), "for"),
    (v("think", "thinks", "thinking", "thought"), "about"),
    (v("depend", "depends", "depending", "depended"), "on"),
];

pub(crate) const WANT: VerbForms = v("want", "wants", "wanting", "wanted");

pub(crate) const PLACES: [(&str, &str); 8] = [
    ("park", "parks"),
    ("school", "schools"),
    ("station", "stations"),
    ("library", "libraries"),
    ("office", "offices"),
    ("market", "markets"),
    ("beach", "beaches"),
    ("museum", "museums"),
];

pub(crate) const OBJECTS: [(&str, &str); 10] = [
    ("book", "books"),
    ("apple", "apples"),
    ("orange", "oranges"),
    ("letter", "letters"),
    ("umbrella", "umbrellas"),
    ("egg", "eggs"),
    ("pen", "pens"),
    ("bag", "bags"),
    ("cake", "cakes"),
    ("idea", "ideas"),
];

pub(crate) const THINGS: [(&str, &str); 6] = [
    ("dog", "dogs"),
    ("teacher", "teachers"),
    ("bus", "buses"),
    ("song", "songs"),
    ("game", "games"),
    ("radio", "radios"),
];

pub(crate) const SINGULAR_SUBJECTS: [&str; 6] =
    ["She", "He", "Tom", "Mary", "My sister", "My brother"];
pub(crate) const PLURAL_SUBJECTS: [&str; 6] =
    ["I", "You", "We", "They", "My friends", "My parents"];

pub(crate) const ADVERBS: [(&str, &str); 5] = [
    ("quick", "quickly"),
    ("quiet", "quietly"),
    ("slow", "slowly"),
    ("happy", "happily"),
    ("careful", "carefully"),
];

pub(crate) const PREPOSITIONS: [&str; 7] = ["to", "at", "for", "about", "on", "in", "with"];
pub(crate) const ARTICLES: [&str; 3] = ["a", "an", "the"];
pub(crate) const VERB_TRIGGERS: [&str; 3] = ["to", "can", "will"];

/// Word-class tables consulted by the error-injection rules.
#[derive(Clone, Debug)]
pub struct Lexicon {
    pub(crate) articles: Vec<String>,
    pub(crate) prepositions: Vec<String>,
    pub(crate) verb_triggers: Vec<String>,
    /// 3rd-person singular form ↔ base form.
    pub(crate) agreement: HashMap<String, String>,
    pub(crate) base_forms: HashMap<String, (String, String)>,
    pub(crate) noun_number: HashMap<String, String>,
    pub(crate) word_form: HashMap<String, String>,
    pub(crate) subject_heads: Vec<String>,
}

impl Lexicon {
    /// The built-in English tables, covering every word the synthetic grammar emits.
    pub fn english() -> Self {
        let verbs: Vec<&VerbForms> = MOTION_VERBS
            .iter()
            .chain(TRANSITIVE_VERBS.iter())
            .chain(PREPOSITIONAL_VERBS.iter().map(|(v, _)| v))
            .chain(std::iter::once(&WANT))
            .collect();
        let mut agreement = HashMap::new();
        let mut base_forms = HashMap::new();
        for v in verbs {
            agreement.insert(v.third.to_string(), v.base.to_string());
            agreement.insert(v.base.to_string(), v.third.to_string());
            base_forms.insert(v.base.to_string(), (v.ing.to_string(), v.past.to_string()));
        }
        let mut noun_number = HashMap::new();
        for (sg, pl) in PLACES.iter().chain(OBJECTS.iter()).chain(THINGS.iter()) {
            noun_number.insert(sg.to_string(), pl.to_string());
            noun_number.insert(pl.to_string(), sg.to_string());
        }
        let mut word_form = HashMap::new();
        for (adj, adv) in ADVERBS {
            word_form.insert(adj.to_string(), adv.to_string());
            word_form.insert(adv.to_string(), adj.to_string());
        }
        let subject_heads = SINGULAR_SUBJECTS
            .iter()
            .chain(PLURAL_SUBJECTS.iter())
            .map(|s| s.rsplit(' ').next().unwrap_or(s).to_string())
            .collect();
        let strings = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Lexicon {
            articles: strings(&ARTICLES),
            prepositions: strings(&PREPOSITIONS),
            verb_triggers: strings(&VERB_TRIGGERS),
            agreement,
            base_forms,
            noun_number,
            word_form,
            subject_heads,
        }
    }

    pub(crate) fn is_article(&self, w: &str) -> bool {
        self.articles.iter().any(|a| a == w)
    }

    pub(crate) fn is_preposition(&self, w: &str) -> bool {
        self.prepositions.iter().any(|p| p == w)
    }

    pub(crate) fn is_subject_head(&self, w: &str) -> bool {
        self.subject_heads.iter().any(|s| s == w)
    }

    pub(crate) fn is_verb_trigger(&self, w: &str) -> bool {
        self.verb_triggers.iter().any(|s| s == w)
    }
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::english()
    }
}
