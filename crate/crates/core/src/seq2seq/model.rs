//! Bidirectional GRU encoder, GRU decoder with dot-product attention, and the exact
//! gradient of the per-pair negative log likelihood.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng as _;

use super::linalg::{axpy, dot, gemv, gemv_t, log_softmax, outer_add, sigmoid, softmax};
use super::params::{Gru, Init, Layout};
use super::{Direction, ModelConfig};
use crate::binio::{Reader, Writer};
use crate::seed::{rng_for, Rng};
use crate::textdata::{TokenId, Vocabulary, BOS, EOS};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"FBGECS2S";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionModel {
    pub(crate) config: ModelConfig,
    pub(crate) vocab_hash: String,
    pub(crate) layout: Layout,
    pub(crate) params: Vec<f64>,
    pub(crate) steps: u64,
}

#[derive(Clone, Debug)]
pub(crate) struct GruCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    n: Vec<f64>,
    un_h: Vec<f64>,
    pub h: Vec<f64>,
}

fn gru_forward(p: &[f64], g: &Gru, x: &[f64], h_prev: &[f64]) -> GruCache {
    let hd = g.hidden;
    let mut wx = p[g.b..g.b + 3 * hd].to_vec();
    gemv(&p[g.w..g.w + 3 * hd * g.input], g.input, x, &mut wx);
    let mut uh = vec![0.0; 3 * hd];
    gemv(&p[g.u..g.u + 3 * hd * hd], hd, h_prev, &mut uh);
    let mut z = vec![0.0; hd];
    let mut r = vec![0.0; hd];
    let mut n = vec![0.0; hd];
    let mut h = vec![0.0; hd];
    for i in 0..hd {
        z[i] = sigmoid(wx[i] + uh[i]);
        r[i] = sigmoid(wx[hd + i] + uh[hd + i]);
        n[i] = (wx[2 * hd + i] + r[i] * uh[2 * hd + i]).tanh();
        h[i] = (1.0 - z[i]) * n[i] + z[i] * h_prev[i];
    }
    GruCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        z,
        r,
        n,
        un_h: uh[2 * hd..].to_vec(),
        h,
    }
}

/// Accumulates parameter gradients; adds input and previous-state gradients to `dx`, `dh_prev`.
fn gru_backward(
    p: &[f64],
    grad: &mut [f64],
    g: &Gru,
    c: &GruCache,
    dh: &[f64],
    dx: &mut [f64],
    dh_prev: &mut [f64],
) {
    let hd = g.hidden;
    let mut da = vec![0.0; 3 * hd];
    let mut dun = vec![0.0; hd];
    for i in 0..hd {
        let dn = dh[i] * (1.0 - c.z[i]);
        let dz = dh[i] * (c.h_prev[i] - c.n[i]);
        dh_prev[i] += dh[i] * c.z[i];
        let dan = dn * (1.0 - c.n[i] * c.n[i]);
        let dr = dan * c.un_h[i];
        da[i] = dz * c.z[i] * (1.0 - c.z[i]);
        da[hd + i] = dr * c.r[i] * (1.0 - c.r[i]);
        da[2 * hd + i] = dan;
        dun[i] = dan * c.r[i];
    }
    let wlen = 3 * hd * g.input;
    outer_add(&mut grad[g.w..g.w + wlen], g.input, &da, &c.x);
    gemv_t(&p[g.w..g.w + wlen], g.input, &da, dx);
    axpy(1.0, &da, &mut grad[g.b..g.b + 3 * hd]);
    let ulen = hd * hd;
    let u_rows = [&da[..hd], &da[hd..2 * hd], &dun[..]];
    for (k, d) in u_rows.iter().enumerate() {
        let off = g.u + k * ulen;
        outer_add(&mut grad[off..off + ulen], hd, d, &c.h_prev);
        gemv_t(&p[off..off + ulen], hd, d, dh_prev);
    }
}

/// Inverted dropout masks drawn from a training RNG.
pub(crate) struct Dropout<'a> {
    pub rate: f64,
    pub rng: &'a mut Rng,
}

impl Dropout<'_> {
    fn mask(&mut self, n: usize) -> Vec<f64> {
        let keep = 1.0 / (1.0 - self.rate);
        (0..n)
            .map(|_| {
                if self.rng.gen::<f64>() < self.rate {
                    0.0
                } else {
                    keep
                }
            })
            .collect()
    }
}

fn apply_mask(v: &mut [f64], mask: &Option<Vec<f64>>) {
    if let Some(m) = mask {
        for (x, k) in v.iter_mut().zip(m) {
            *x *= k;
        }
    }
}

/// Encoder output for one source sentence.
#[derive(Clone, Debug)]
pub(crate) struct Encoded {
    src: Vec<TokenId>,
    emb_masks: Vec<Option<Vec<f64>>>,
    layers: Vec<[Vec<GruCache>; 2]>,
    pub ann: Vec<Vec<f64>>,
    pub keys: Vec<Vec<f64>>,
    summary: Vec<f64>,
    pub init: Vec<Vec<f64>>,
}

/// One decoder step, cached for backprop.
#[derive(Clone, Debug)]
pub(crate) struct Step {
    y_in: TokenId,
    emb_mask: Option<Vec<f64>>,
    pub layers: Vec<GruCache>,
    alpha: Vec<f64>,
    sc: Vec<f64>,
    o: Vec<f64>,
    o_mask: Option<Vec<f64>>,
    od: Vec<f64>,
    pub log_probs: Vec<f64>,
}

impl CorrectionModel {
    /// Seeded initialization; embeddings U(-0.1, 0.1), matrices U(-1/√cols, 1/√cols), biases 0.
    pub fn new(config: ModelConfig, vocab: &Vocabulary) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(
            vocab.len(),
            config.embedding_dim,
            config.hidden_dim,
            config.encoder_layers,
            config.decoder_layers,
        );
        let mut rng = rng_for(config.seed, "seq2seq-init");
        let mut params = vec![0.0; layout.total];
        for slot in &layout.slots {
            let bound = match slot.init {
                Init::Embedding => 0.1,
                Init::Matrix => 1.0 / (slot.cols as f64).sqrt(),
                Init::Zero => continue,
            };
            for p in &mut params[slot.offset..slot.offset + slot.len()] {
                *p = rng.gen_range(-bound..bound);
            }
        }
        Ok(Self {
            config,
            vocab_hash: vocab.hash(),
            layout,
            params,
            steps: 0,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn direction(&self) -> Direction {
        self.config.direction
    }

    pub fn vocab_hash(&self) -> &str {
        &self.vocab_hash
    }

    pub fn vocab_size(&self) -> usize {
        self.layout.vocab
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn training_steps(&self) -> u64 {
        self.steps
    }

    /// Same parameters, other decoding direction.
    pub fn with_direction(&self, direction: Direction) -> Self {
        let mut m = self.clone();
        m.config.direction = direction;
        m
    }

    pub fn check_vocabulary(&self, vocab: &Vocabulary) -> Result<()> {
        if vocab.hash() != self.vocab_hash || vocab.len() != self.layout.vocab {
            return Err(Error::InputMismatch(
                "model was trained with a different vocabulary".into(),
            ));
        }
        Ok(())
    }

    /// Target in the order the decoder emits it.
    pub(crate) fn oriented(&self, target: &[TokenId]) -> Vec<TokenId> {
        let mut t = target.to_vec();
        if self.config.direction == Direction::R2L {
            t.reverse();
        }
        t
    }

    fn clamp(&self, t: TokenId) -> TokenId {
        if (t as usize) < self.layout.vocab {
            t
        } else {
            crate::textdata::UNK
        }
    }

    pub(crate) fn encode(&self, source: &[TokenId], mut dropout: Option<&mut Dropout>) -> Encoded {
        let l = &self.layout;
        let p = &self.params;
        let (e, h) = (l.emb, l.hidden);
        let src: Vec<TokenId> = source.iter().map(|&t| self.clamp(t)).chain([EOS]).collect();
        let s = src.len();
        let mut emb_masks = Vec::with_capacity(s);
        let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(s);
        for &t in &src {
            let off = l.src_emb + t as usize * e;
            let mut x = p[off..off + e].to_vec();
            let mask = dropout.as_deref_mut().map(|d| d.mask(e));
            apply_mask(&mut x, &mask);
            emb_masks.push(mask);
            inputs.push(x);
        }
        let mut layers = Vec::with_capacity(l.enc.len());
        for cells in &l.enc {
            let mut fwd = Vec::with_capacity(s);
            let mut state = vec![0.0; h];
            for x in &inputs {
                let c = gru_forward(p, &cells[0], x, &state);
                state.clone_from(&c.h);
                fwd.push(c);
            }
            let mut bwd = vec![None; s];
            let mut state = vec![0.0; h];
            for j in (0..s).rev() {
                let c = gru_forward(p, &cells[1], &inputs[j], &state);
                state.clone_from(&c.h);
                bwd[j] = Some(c);
            }
            let bwd: Vec<GruCache> = bwd.into_iter().map(Option::unwrap).collect();
            inputs = (0..s)
                .map(|j| [fwd[j].h.as_slice(), bwd[j].h.as_slice()].concat())
                .collect();
            layers.push([fwd, bwd]);
        }
        let ann = inputs;
        let keys = ann
            .iter()
            .map(|a| {
                let mut k = vec![0.0; h];
                gemv(&p[l.key..l.key + h * 2 * h], 2 * h, a, &mut k);
                k
            })
            .collect();
        let summary = [&ann[s - 1][..h], &ann[0][h..]].concat();
        let init = l
            .init
            .iter()
            .map(|&(w, b)| {
                let mut s0 = p[b..b + h].to_vec();
                gemv(&p[w..w + h * 2 * h], 2 * h, &summary, &mut s0);
                s0.iter_mut().for_each(|x| *x = x.tanh());
                s0
            })
            .collect();
        Encoded {
            src,
            emb_masks,
            layers,
            ann,
            keys,
            summary,
            init,
        }
    }

    pub(crate) fn step(
        &self,
        enc: &Encoded,
        state: &[Vec<f64>],
        y_in: TokenId,
        mut dropout: Option<&mut Dropout>,
    ) -> Step {
        let l = &self.layout;
        let p = &self.params;
        let (e, h, v) = (l.emb, l.hidden, l.vocab);
        let y_in = self.clamp(y_in);
        let off = l.tgt_emb + y_in as usize * e;
        let mut x = p[off..off + e].to_vec();
        let emb_mask = dropout.as_deref_mut().map(|d| d.mask(e));
        apply_mask(&mut x, &emb_mask);
        let mut layers = Vec::with_capacity(l.dec.len());
        for (cell, prev) in l.dec.iter().zip(state) {
            let c = gru_forward(p, cell, &x, prev);
            x.clone_from(&c.h);
            layers.push(c);
        }
        let s = x;
        let mut alpha: Vec<f64> = enc.keys.iter().map(|k| dot(&s, k)).collect();
        softmax(&mut alpha);
        let mut ctx = vec![0.0; 2 * h];
        for (a, ann) in alpha.iter().zip(&enc.ann) {
            axpy(*a, ann, &mut ctx);
        }
        let sc = [s, ctx].concat();
        let mut o = p[l.comb_b..l.comb_b + h].to_vec();
        gemv(&p[l.comb_w..l.comb_w + h * 3 * h], 3 * h, &sc, &mut o);
        o.iter_mut().for_each(|x| *x = x.tanh());
        let o_mask = dropout.map(|d| d.mask(h));
        let mut od = o.clone();
        apply_mask(&mut od, &o_mask);
        let mut log_probs = p[l.out_b..l.out_b + v].to_vec();
        gemv(&p[l.out_w..l.out_w + v * h], h, &od, &mut log_probs);
        log_softmax(&mut log_probs);
        Step {
            y_in,
            emb_mask,
            layers,
            alpha,
            sc,
            o,
            o_mask,
            od,
            log_probs,
        }
    }

    /// Negative log likelihood of `target` (decoder order, EOS appended) given `source`;
    /// adds its gradient to `grad` when given.
    pub(crate) fn pair_loss(
        &self,
        source: &[TokenId],
        target: &[TokenId],
        grad: Option<&mut [f64]>,
        mut dropout: Option<&mut Dropout>,
    ) -> f64 {
        let enc = self.encode(source, dropout.as_deref_mut());
        let outputs: Vec<TokenId> = target.iter().map(|&t| self.clamp(t)).chain([EOS]).collect();
        let mut state = enc.init.clone();
        let mut steps = Vec::with_capacity(outputs.len());
        let mut loss = 0.0;
        let mut y_in = BOS;
        for &y in &outputs {
            let st = self.step(&enc, &state, y_in, dropout.as_deref_mut());
            loss -= st.log_probs[y as usize];
            state = st.layers.iter().map(|c| c.h.clone()).collect();
            steps.push(st);
            y_in = y;
        }
        if let Some(grad) = grad {
            self.backward(&enc, &steps, &outputs, grad);
        }
        loss
    }

    fn backward(&self, enc: &Encoded, steps: &[Step], outputs: &[TokenId], grad: &mut [f64]) {
        let l = &self.layout;
        let p = &self.params;
        let (e, h, v) = (l.emb, l.hidden, l.vocab);
        let s_len = enc.ann.len();
        let n_dec = l.dec.len();
        let mut d_ann = vec![vec![0.0; 2 * h]; s_len];
        let mut d_keys = vec![vec![0.0; h]; s_len];
        let mut carry = vec![vec![0.0; h]; n_dec];
        for (st, &y) in steps.iter().zip(outputs).rev() {
            let mut dlog: Vec<f64> = st.log_probs.iter().map(|lp| lp.exp()).collect();
            dlog[y as usize] -= 1.0;
            outer_add(&mut grad[l.out_w..l.out_w + v * h], h, &dlog, &st.od);
            axpy(1.0, &dlog, &mut grad[l.out_b..l.out_b + v]);
            let mut dout = vec![0.0; h];
            gemv_t(&p[l.out_w..l.out_w + v * h], h, &dlog, &mut dout);
            apply_mask(&mut dout, &st.o_mask);
            let dpre: Vec<f64> = dout
                .iter()
                .zip(&st.o)
                .map(|(d, o)| d * (1.0 - o * o))
                .collect();
            outer_add(
                &mut grad[l.comb_w..l.comb_w + h * 3 * h],
                3 * h,
                &dpre,
                &st.sc,
            );
            axpy(1.0, &dpre, &mut grad[l.comb_b..l.comb_b + h]);
            let mut dsc = vec![0.0; 3 * h];
            gemv_t(&p[l.comb_w..l.comb_w + h * 3 * h], 3 * h, &dpre, &mut dsc);
            let (ds, dc) = dsc.split_at_mut(h);
            let s = &st.sc[..h];
            let dalpha: Vec<f64> = enc.ann.iter().map(|a| dot(dc, a)).collect();
            let mean: f64 = st.alpha.iter().zip(&dalpha).map(|(a, d)| a * d).sum();
            for j in 0..s_len {
                axpy(st.alpha[j], dc, &mut d_ann[j]);
                let de = st.alpha[j] * (dalpha[j] - mean);
                axpy(de, &enc.keys[j], ds);
                axpy(de, s, &mut d_keys[j]);
            }
            let mut dh_in = ds.to_vec();
            for li in (0..n_dec).rev() {
                let dh: Vec<f64> = dh_in.iter().zip(&carry[li]).map(|(a, b)| a + b).collect();
                let cell = &l.dec[li];
                let mut dx = vec![0.0; cell.input];
                let mut dprev = vec![0.0; h];
                gru_backward(p, grad, cell, &st.layers[li], &dh, &mut dx, &mut dprev);
                carry[li] = dprev;
                dh_in = dx;
            }
            apply_mask(&mut dh_in, &st.emb_mask);
            let off = l.tgt_emb + st.y_in as usize * e;
            axpy(1.0, &dh_in, &mut grad[off..off + e]);
        }
        let mut dsummary = vec![0.0; 2 * h];
        for (li, &(w, b)) in l.init.iter().enumerate() {
            let s0 = &enc.init[li];
            let dai: Vec<f64> = carry[li]
                .iter()
                .zip(s0)
                .map(|(d, s)| d * (1.0 - s * s))
                .collect();
            outer_add(&mut grad[w..w + h * 2 * h], 2 * h, &dai, &enc.summary);
            axpy(1.0, &dai, &mut grad[b..b + h]);
            gemv_t(&p[w..w + h * 2 * h], 2 * h, &dai, &mut dsummary);
        }
        for j in 0..s_len {
            outer_add(
                &mut grad[l.key..l.key + h * 2 * h],
                2 * h,
                &d_keys[j],
                &enc.ann[j],
            );
            gemv_t(
                &p[l.key..l.key + h * 2 * h],
                2 * h,
                &d_keys[j],
                &mut d_ann[j],
            );
        }
        axpy(1.0, &dsummary[..h], &mut d_ann[s_len - 1][..h]);
        axpy(1.0, &dsummary[h..], &mut d_ann[0][h..]);
        let mut d_out = d_ann;
        for (cells, caches) in l.enc.iter().zip(&enc.layers).rev() {
            let mut d_in = vec![vec![0.0; cells[0].input]; s_len];
            let mut carry = vec![0.0; h];
            for j in (0..s_len).rev() {
                let dh: Vec<f64> = d_out[j][..h]
                    .iter()
                    .zip(&carry)
                    .map(|(a, b)| a + b)
                    .collect();
                let mut dprev = vec![0.0; h];
                gru_backward(
                    p,
                    grad,
                    &cells[0],
                    &caches[0][j],
                    &dh,
                    &mut d_in[j],
                    &mut dprev,
                );
                carry = dprev;
            }
            let mut carry = vec![0.0; h];
            for j in 0..s_len {
                let dh: Vec<f64> = d_out[j][h..]
                    .iter()
                    .zip(&carry)
                    .map(|(a, b)| a + b)
                    .collect();
                let mut dprev = vec![0.0; h];
                gru_backward(
                    p,
                    grad,
                    &cells[1],
                    &caches[1][j],
                    &dh,
                    &mut d_in[j],
                    &mut dprev,
                );
                carry = dprev;
            }
            d_out = d_in;
        }
        for (j, &t) in enc.src.iter().enumerate() {
            apply_mask(&mut d_out[j], &enc.emb_masks[j]);
            let off = l.src_emb + t as usize * e;
            axpy(1.0, &d_out[j], &mut grad[off..off + e]);
        }
    }

    /// `ln P(output | input)` in natural order, EOS included.
    pub fn log_prob(&self, input: &[TokenId], output: &[TokenId]) -> f64 {
        -self.pair_loss(input, &self.oriented(output), None, None)
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = Writer::new(w);
        w.bytes(MAGIC)?;
        w.u32(VERSION)?;
        let c = &self.config;
        for v in [
            c.embedding_dim,
            c.hidden_dim,
            c.encoder_layers,
            c.decoder_layers,
        ] {
            w.u64(v as u64)?;
        }
        w.u32(match c.direction {
            Direction::L2R => 0,
            Direction::R2L => 1,
        })?;
        w.f64(c.dropout)?;
        w.u64(c.seed)?;
        w.str(&self.vocab_hash)?;
        w.u64(self.layout.vocab as u64)?;
        w.u64(self.steps)?;
        w.f64s(&self.params)?;
        w.finish()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = Reader::new(r);
        r.expect_magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let mut dims = [0usize; 4];
        for d in &mut dims {
            *d = r.len(1 << 16)?;
        }
        let direction = match r.u32()? {
            0 => Direction::L2R,
            1 => Direction::R2L,
            other => return Err(Error::Format(format!("bad direction tag {other}"))),
        };
        let config = ModelConfig {
            embedding_dim: dims[0],
            hidden_dim: dims[1],
            encoder_layers: dims[2],
            decoder_layers: dims[3],
            direction,
            dropout: r.f64()?,
            seed: r.u64()?,
        };
        config
            .validate()
            .map_err(|e| Error::Format(e.to_string()))?;
        let vocab_hash = r.str()?;
        let vocab = r.len(1 << 24)?;
        let steps = r.u64()?;
        let params = r.f64s()?;
        let layout = Layout::new(vocab, dims[0], dims[1], dims[2], dims[3]);
        if params.len() != layout.total {
            return Err(Error::Format(format!(
                "checkpoint has {} parameters, config implies {}",
                params.len(),
                layout.total
            )));
        }
        Ok(Self {
            config,
            vocab_hash,
            layout,
            params,
            steps,
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
}
