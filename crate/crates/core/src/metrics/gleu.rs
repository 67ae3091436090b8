use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GleuConfig {
    pub max_n: usize,
    /// Reference-sampling rounds when some sentence has more than one reference.
    pub iterations: usize,
    pub seed: u64,
}

impl Default for GleuConfig {
    fn default() -> Self {
        Self {
            max_n: 4,
            iterations: 500,
            seed: 0,
        }
    }
}

fn ngrams<T: Hash + Eq>(s: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut m = HashMap::new();
    if s.len() >= n {
        for w in s.windows(n) {
            *m.entry(w).or_default() += 1;
        }
    }
    m
}

/// `[hyp len, ref len, (numerator, denominator) for n = 1..=max_n]`.
fn sentence_stats<T: Hash + Eq>(src: &[T], hyp: &[T], reference: &[T], max_n: usize) -> Vec<u64> {
    let mut stats = vec![hyp.len() as u64, reference.len() as u64];
    for n in 1..=max_n {
        let (h, r, s) = (ngrams(hyp, n), ngrams(reference, n), ngrams(src, n));
        let mut hr = 0i64;
        let mut h_src_only = 0i64;
        for (g, &hc) in &h {
            let rc = r.get(g).copied().unwrap_or(0);
            hr += hc.min(rc) as i64;
            let src_minus_ref = s.get(g).copied().unwrap_or(0).saturating_sub(rc);
            h_src_only += hc.min(src_minus_ref) as i64;
        }
        stats.push((hr - h_src_only).max(0) as u64);
        stats.push((hyp.len() + 1).saturating_sub(n) as u64);
    }
    stats
}

fn corpus_score(stats: &[u64], max_n: usize) -> f64 {
    if stats.contains(&0) {
        return 0.0;
    }
    let (c, r) = (stats[0] as f64, stats[1] as f64);
    let log_prec: f64 = stats[2..]
        .chunks(2)
        .map(|p| (p[0] as f64 / p[1] as f64).ln())
        .sum::<f64>()
        / max_n as f64;
    ((1.0 - r / c).min(0.0) + log_prec).exp()
}

struct Fnv(u64);

impl Hasher for Fnv {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x100_0000_01b3);
        }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Corpus GLEU in percent.
///
/// With multiple references, each round samples one reference per sentence and the result
/// is the mean over rounds. The sample depends on the sentence content rather than its
/// position, so the score does not change when the corpus is reordered.
pub fn gleu<T: Hash + Eq>(
    sources: &[Vec<T>],
    hypotheses: &[Vec<T>],
    references: &[Vec<Vec<T>>],
    cfg: &GleuConfig,
) -> f64 {
    assert_eq!(sources.len(), hypotheses.len(), "one hypothesis per source");
    assert_eq!(
        sources.len(),
        references.len(),
        "references for every source"
    );
    let per_sentence: Vec<(u64, Vec<Vec<u64>>)> = sources
        .iter()
        .zip(hypotheses)
        .zip(references)
        .map(|((s, h), refs)| {
            assert!(!refs.is_empty(), "at least one reference per sentence");
            let mut key = Fnv(0xcbf2_9ce4_8422_2325);
            s.hash(&mut key);
            h.hash(&mut key);
            refs.hash(&mut key);
            let stats = refs
                .iter()
                .map(|r| sentence_stats(s, h, r, cfg.max_n))
                .collect();
            (key.finish(), stats)
        })
        .collect();
    let multi = per_sentence.iter().any(|(_, refs)| refs.len() > 1);
    let rounds = if multi { cfg.iterations.max(1) } else { 1 };
    let width = 2 + 2 * cfg.max_n;
    let mut total = 0.0;
    for round in 0..rounds {
        let mut sums = vec![0u64; width];
        for (key, refs) in &per_sentence {
            let pick = if refs.len() == 1 {
                0
            } else {
                (splitmix(cfg.seed ^ splitmix(*key ^ round as u64)) % refs.len() as u64) as usize
            };
            for (acc, v) in sums.iter_mut().zip(&refs[pick]) {
                *acc += v;
            }
        }
        total += corpus_score(&sums, cfg.max_n);
    }
    100.0 * total / rounds as f64
}
