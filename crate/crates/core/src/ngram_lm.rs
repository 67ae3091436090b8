//! Interpolated absolute-discounting n-gram language model, sentence cross entropy and
//! the fluency score `f(x) = 1 / (1 + H(x))`.
//!
//! Probabilities are in nats. Each training sentence is padded with `order - 1` BOS
//! symbols and terminated by EOS; EOS is a predicted position, BOS never is.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::binio::{Reader, Writer};
use crate::textdata::{TokenId, TokenSeq, Vocabulary, BOS, EOS, PAD, UNK};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"FBGECLM\0";
const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Smoothing {
    /// Absolute discount applied to every observed count above the unigram level, in [0, 1].
    pub discount: f64,
    /// Additive pseudo-count of the unigram floor.
    pub unigram_add: f64,
    /// Keep UNK in the predicted support even if it never occurs in training.
    pub open_vocabulary: bool,
}

impl Default for Smoothing {
    fn default() -> Self {
        Self {
            discount: 0.75,
            unigram_add: 1.0,
            open_vocabulary: true,
        }
    }
}

impl Smoothing {
    /// Unsmoothed relative frequencies on a closed vocabulary (test fixtures).
    pub fn mle() -> Self {
        Self {
            discount: 0.0,
            unigram_add: 0.0,
            open_vocabulary: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct ContextCounts {
    total: u64,
    followers: HashMap<TokenId, u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NGramModel {
    order: usize,
    smoothing: Smoothing,
    vocab: Vocabulary,
    in_support: Vec<bool>,
    support_size: usize,
    unigrams: Vec<u64>,
    unigram_total: u64,
    /// `contexts[l - 1]` holds every observed context of length `l`.
    contexts: Vec<HashMap<Vec<TokenId>, ContextCounts>>,
}

/// Sentence cross entropy and fluency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluencyScore {
    /// Nats per position, EOS included.
    pub h: f64,
    /// `1 / (1 + h)`, in (0, 1].
    pub f: f64,
}

impl FluencyScore {
    pub fn from_cross_entropy(h: f64) -> Self {
        Self {
            h,
            f: 1.0 / (1.0 + h),
        }
    }
}

/// Counts n-grams of a tokenized corpus.
pub fn train_lm(
    corpus: &[TokenSeq],
    order: usize,
    smoothing: Smoothing,
    vocab: &Vocabulary,
) -> Result<NGramModel> {
    if order == 0 {
        return Err(Error::config("language model order must be at least 1"));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(0.0..=1.0).contains(&smoothing.discount) || smoothing.unigram_add < 0.0 {
        return Err(Error::config(format!("invalid smoothing {smoothing:?}")));
    }
    let v = vocab.len();
    let mut unigrams = vec![0u64; v];
    let mut contexts: Vec<HashMap<Vec<TokenId>, ContextCounts>> = vec![HashMap::new(); order - 1];
    let mut padded = Vec::new();
    for sentence in corpus {
        padded.clear();
        padded.extend(std::iter::repeat_n(BOS, order - 1));
        padded.extend(
            sentence
                .iter()
                .map(|&t| if (t as usize) < v { t } else { UNK }),
        );
        padded.push(EOS);
        for i in order - 1..padded.len() {
            let w = padded[i];
            unigrams[w as usize] += 1;
            for (l, table) in contexts.iter_mut().enumerate() {
                let ctx = &padded[i - (l + 1)..i];
                let entry = table.entry(ctx.to_vec()).or_default();
                entry.total += 1;
                *entry.followers.entry(w).or_default() += 1;
            }
        }
    }
    let mut in_support = vec![true; v];
    in_support[PAD as usize] = false;
    in_support[BOS as usize] = false;
    in_support[UNK as usize] = smoothing.open_vocabulary || unigrams[UNK as usize] > 0;
    let support_size = in_support.iter().filter(|&&b| b).count();
    Ok(NGramModel {
        order,
        smoothing,
        vocab: vocab.clone(),
        in_support,
        support_size,
        unigram_total: unigrams.iter().sum(),
        unigrams,
        contexts,
    })
}

impl NGramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    /// Ids that receive probability mass.
    pub fn support(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.in_support
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i as TokenId)
    }

    fn unigram_prob(&self, w: TokenId) -> f64 {
        let k = self.smoothing.unigram_add;
        let c = self.unigrams.get(w as usize).copied().unwrap_or(0) as f64;
        (c + k) / (self.unigram_total as f64 + k * self.support_size as f64)
    }

    fn prob(&self, w: TokenId, ctx: &[TokenId]) -> f64 {
        if ctx.is_empty() {
            return self.unigram_prob(w);
        }
        let lower = self.prob(w, &ctx[1..]);
        match self.contexts[ctx.len() - 1].get(ctx) {
            None => lower,
            Some(cc) => {
                let d = self.smoothing.discount;
                let c = cc.followers.get(&w).copied().unwrap_or(0) as f64;
                let n1 = cc.followers.len() as f64;
                ((c - d).max(0.0) + d * n1 * lower) / cc.total as f64
            }
        }
    }

    /// `ln P(token | context)`, using at most the last `order - 1` context tokens. A
    /// context shorter than that is answered at the correspondingly lower order. Tokens
    /// outside the support (UNK in a closed-vocabulary model) get the unigram floor.
    pub fn log_prob(&self, token: TokenId, context: &[TokenId]) -> f64 {
        let keep = context.len().min(self.order - 1);
        let ctx = &context[context.len() - keep..];
        let token = if (token as usize) < self.vocab.len() {
            token
        } else {
            UNK
        };
        self.prob(token, ctx).ln().min(0.0)
    }

    /// Total log probability of `x` followed by EOS, BOS-padded on the left.
    pub fn sentence_log_prob(&self, x: &[TokenId]) -> f64 {
        let pad = self.order - 1;
        let mut padded = Vec::with_capacity(pad + x.len() + 1);
        padded.extend(std::iter::repeat_n(BOS, pad));
        padded.extend_from_slice(x);
        padded.push(EOS);
        (pad..padded.len())
            .map(|i| self.log_prob(padded[i], &padded[i - pad..i]))
            .sum()
    }

    /// `H(x) = -(Σ ln P(x_i | x_<i)) / |x|` with EOS counted in `|x|`.
    pub fn cross_entropy(&self, x: &[TokenId]) -> Result<f64> {
        if x.is_empty() {
            return Err(Error::EmptyInput);
        }
        let h = -self.sentence_log_prob(x) / (x.len() + 1) as f64;
        Ok(h.max(0.0))
    }

    pub fn fluency(&self, x: &[TokenId]) -> Result<FluencyScore> {
        Ok(FluencyScore::from_cross_entropy(self.cross_entropy(x)?))
    }

    /// Human-readable probabilities of every support token in every observed context.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let support: Vec<TokenId> = self.support().collect();
        let name = |ids: &[TokenId]| {
            ids.iter()
                .map(|&i| self.vocab.surface(i))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "# order {} smoothing {:?}", self.order, self.smoothing);
        let mut all: Vec<Vec<TokenId>> = vec![Vec::new()];
        for table in &self.contexts {
            let mut keys: Vec<_> = table.keys().cloned().collect();
            keys.sort();
            all.extend(keys);
        }
        for ctx in all {
            for &w in &support {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{:.6}",
                    name(&ctx),
                    self.vocab.surface(w),
                    self.prob(w, &ctx)
                );
            }
        }
        out
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = Writer::new(w);
        w.bytes(MAGIC)?;
        w.u32(VERSION)?;
        w.u32(self.order as u32)?;
        w.f64(self.smoothing.discount)?;
        w.f64(self.smoothing.unigram_add)?;
        w.u32(u32::from(self.smoothing.open_vocabulary))?;
        w.u64(self.vocab.words().len() as u64)?;
        for s in self.vocab.words() {
            w.str(s)?;
        }
        w.u64(self.unigrams.len() as u64)?;
        for &c in &self.unigrams {
            w.u64(c)?;
        }
        for table in &self.contexts {
            let mut keys: Vec<&Vec<TokenId>> = table.keys().collect();
            keys.sort();
            w.u64(keys.len() as u64)?;
            for ctx in keys {
                let cc = &table[ctx];
                for &t in ctx {
                    w.u32(t)?;
                }
                w.u64(cc.total)?;
                let mut followers: Vec<_> = cc.followers.iter().collect();
                followers.sort();
                w.u64(followers.len() as u64)?;
                for (&t, &c) in followers {
                    w.u32(t)?;
                    w.u64(c)?;
                }
            }
        }
        w.finish()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = Reader::new(r);
        r.expect_magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!(
                "unsupported language model version {version}"
            )));
        }
        let order = r.u32()? as usize;
        if order == 0 || order > 32 {
            return Err(Error::Format(format!("bad order {order}")));
        }
        let smoothing = Smoothing {
            discount: r.f64()?,
            unigram_add: r.f64()?,
            open_vocabulary: r.u32()? != 0,
        };
        let n_words = r.len(1 << 24)?;
        let words = (0..n_words).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
        let vocab = Vocabulary::from_surfaces(words)?;
        let n = r.len(1 << 24)?;
        if n != vocab.len() {
            return Err(Error::Format(
                "unigram table does not match vocabulary".into(),
            ));
        }
        let unigrams = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
        let mut contexts = Vec::with_capacity(order - 1);
        for l in 1..order {
            let n_ctx = r.len(1 << 32)?;
            let mut table = HashMap::with_capacity(n_ctx);
            for _ in 0..n_ctx {
                let ctx = (0..l).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
                let total = r.u64()?;
                let n_f = r.len(1 << 24)?;
                let mut followers = HashMap::with_capacity(n_f);
                for _ in 0..n_f {
                    let t = r.u32()?;
                    followers.insert(t, r.u64()?);
                }
                table.insert(ctx, ContextCounts { total, followers });
            }
            contexts.push(table);
        }
        let mut in_support = vec![true; vocab.len()];
        in_support[PAD as usize] = false;
        in_support[BOS as usize] = false;
        in_support[UNK as usize] = smoothing.open_vocabulary || unigrams[UNK as usize] > 0;
        Ok(NGramModel {
            order,
            smoothing,
            support_size: in_support.iter().filter(|&&b| b).count(),
            in_support,
            unigram_total: unigrams.iter().sum(),
            unigrams,
            contexts,
            vocab,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file =
            std::fs::File::create(path).map_err(Error::io(format!("create {}", path.display())))?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file =
            std::fs::File::open(path).map_err(Error::io(format!("open {}", path.display())))?;
        Self::read_from(std::io::BufReader::new(file))
    }

    /// Observed contexts of every length (for exhaustive checks on small models).
    pub fn observed_contexts(&self) -> Vec<Vec<TokenId>> {
        let mut out = vec![Vec::new()];
        for table in &self.contexts {
            let mut keys: Vec<_> = table.keys().cloned().collect();
            keys.sort();
            out.extend(keys);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn vocab(words: &[&str]) -> Vocabulary {
        Vocabulary::from_surfaces(words.iter().copied()).unwrap()
    }

    fn enc(v: &Vocabulary, lines: &[&str]) -> Vec<TokenSeq> {
        lines
            .iter()
            .map(|l| v.encode(&l.split_whitespace().collect::<Vec<_>>()))
            .collect()
    }

    fn add_one_unigram() -> (Vocabulary, NGramModel) {
        let v = vocab(&["a", "b", "c"]);
        let s = Smoothing {
            discount: 0.75,
            unigram_add: 1.0,
            open_vocabulary: false,
        };
        let m = train_lm(&enc(&v, &["a b", "a c"]), 1, s, &v).unwrap();
        (v, m)
    }

    #[test]
    fn add_one_unigram_fixture() {
        let (v, m) = add_one_unigram();
        // 6 predicted tokens (2 EOS included), 4 support types.
        let p = m.log_prob(v.id("a"), &[]).exp();
        assert!((p - 0.3).abs() < 1e-12);
        assert!((m.log_prob(v.id("a"), &[]) - (-1.2040)).abs() < 1e-4);
        assert_eq!(m.support().count(), 4);
    }

    #[test]
    fn uniform_unigram() {
        let v = vocab(&["a", "b", "c"]);
        let m = train_lm(&enc(&v, &["a b c"]), 1, Smoothing::mle(), &v).unwrap();
        for w in ["a", "b", "c"] {
            assert!((m.log_prob(v.id(w), &[]) - (0.25f64).ln()).abs() < 1e-12);
        }
        assert!((m.log_prob(EOS, &[]) - (-1.3863)).abs() < 1e-4);
        let h = m.cross_entropy(&enc(&v, &["c a b"])[0]).unwrap();
        assert!((h - 1.3863).abs() < 1e-4);
        let f = m.fluency(&enc(&v, &["c a b"])[0]).unwrap();
        assert!((f.f - 0.4191).abs() < 1e-4);
    }

    #[test]
    fn certainty_gives_zero_entropy() {
        let v = vocab(&["a", "b"]);
        let m = train_lm(&enc(&v, &["a b"]), 2, Smoothing::mle(), &v).unwrap();
        assert_eq!(m.log_prob(v.id("a"), &[BOS]), 0.0);
        let x = &enc(&v, &["a b"])[0];
        assert_eq!(m.cross_entropy(x).unwrap(), 0.0);
        assert_eq!(m.fluency(x).unwrap().f, 1.0);
    }

    #[test]
    fn duplicated_corpus_leaves_mle_entropy_unchanged() {
        let v = vocab(&["a", "b", "c"]);
        let once = train_lm(&enc(&v, &["a b", "b c a"]), 2, Smoothing::mle(), &v).unwrap();
        let twice = train_lm(
            &enc(&v, &["a b", "b c a", "a b", "b c a"]),
            2,
            Smoothing::mle(),
            &v,
        )
        .unwrap();
        let x = &enc(&v, &["b c a"])[0];
        assert_eq!(
            once.cross_entropy(x).unwrap(),
            twice.cross_entropy(x).unwrap()
        );
        let o1 = train_lm(&enc(&v, &["a b"]), 1, Smoothing::mle(), &v).unwrap();
        let o5 = train_lm(&enc(&v, &["a b"; 5]), 1, Smoothing::mle(), &v).unwrap();
        assert_eq!(o1.log_prob(v.id("a"), &[]), o5.log_prob(v.id("a"), &[]));
    }

    #[test]
    fn preconditions() {
        let v = vocab(&["a"]);
        assert!(matches!(
            train_lm(&[], 3, Smoothing::default(), &v),
            Err(Error::EmptyCorpus)
        ));
        assert!(matches!(
            train_lm(&enc(&v, &["a"]), 0, Smoothing::default(), &v),
            Err(Error::Config(_))
        ));
        let m = train_lm(&enc(&v, &["a"]), 2, Smoothing::default(), &v).unwrap();
        assert!(matches!(m.cross_entropy(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn fluency_range_edges() {
        assert_eq!(FluencyScore::from_cross_entropy(0.0).f, 1.0);
        assert!((FluencyScore::from_cross_entropy(1.3863).f - 0.4191).abs() < 1e-4);
        let tiny = FluencyScore::from_cross_entropy(1e300).f;
        assert!(tiny > 0.0 && tiny < 1e-299);
    }

    #[test]
    fn binary_round_trip_and_dump() {
        let v = vocab(&["a", "b", "c"]);
        let m = train_lm(
            &enc(&v, &["a b c", "b a", "c c a b"]),
            3,
            Smoothing::default(),
            &v,
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let back = NGramModel::read_from(&buf[..]).unwrap();
        assert_eq!(back, m);
        let mut buf2 = Vec::new();
        back.write_to(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
        assert!(m.dump().contains("<s> <s>\ta\t"));
        assert!(NGramModel::read_from(&b"NOTAMODEL"[..]).is_err());
    }

    fn random_model(seed: u64, order: usize) -> (Vocabulary, NGramModel, Vec<TokenSeq>) {
        use rand::Rng;
        let mut rng = crate::seed::rng_for(seed, "lm-fixture");
        let n_words = rng.gen_range(1..=16);
        let words: Vec<String> = (0..n_words).map(|i| format!("w{i}")).collect();
        let v = Vocabulary::from_surfaces(words).unwrap();
        let corpus: Vec<TokenSeq> = (0..rng.gen_range(1..8))
            .map(|_| {
                (0..rng.gen_range(1..7))
                    .map(|_| rng.gen_range(4..v.len() as TokenId))
                    .collect()
            })
            .collect();
        let m = train_lm(&corpus, order, Smoothing::default(), &v).unwrap();
        (v, m, corpus)
    }

    proptest! {
        #[test]
        fn distributions_are_normalized(seed in any::<u64>(), order in 1usize..5) {
            let (_, m, _) = random_model(seed, order);
            for ctx in m.observed_contexts() {
                let total: f64 = m.support().map(|w| m.log_prob(w, &ctx).exp()).sum();
                prop_assert!((total - 1.0).abs() < 1e-9, "context {:?} sums to {}", ctx, total);
                for w in m.support() {
                    prop_assert!(m.log_prob(w, &ctx) > f64::NEG_INFINITY);
                }
            }
        }

        #[test]
        fn short_context_matches_lower_order(seed in any::<u64>(), order in 2usize..5) {
            let (_, high, corpus) = random_model(seed, order);
            let v = high.vocabulary().clone();
            let low = train_lm(&corpus, order - 1, Smoothing::default(), &v).unwrap();
            for ctx in low.observed_contexts() {
                if ctx.len() >= order - 1 { continue; }
                for w in high.support() {
                    prop_assert!((high.log_prob(w, &ctx) - low.log_prob(w, &ctx)).abs() < 1e-12);
                }
            }
        }
    }
}
