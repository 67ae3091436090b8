//! Flat parameter buffer layout.

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Init {
    Embedding,
    Matrix,
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Slot {
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
    pub init: Init,
}

impl Slot {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }
}

/// A GRU cell: `w` is `3H x input`, `u` is `3H x H`, `b` is `3H`, gates stacked as z, r, n.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Gru {
    pub w: usize,
    pub u: usize,
    pub b: usize,
    pub input: usize,
    pub hidden: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Layout {
    pub vocab: usize,
    pub emb: usize,
    pub hidden: usize,
    pub src_emb: usize,
    pub tgt_emb: usize,
    /// Forward and backward cell per encoder layer.
    pub enc: Vec<[Gru; 2]>,
    /// `H x 2H` attention key projection.
    pub key: usize,
    /// Per decoder layer: `H x 2H` weight and `H` bias for the initial state.
    pub init: Vec<(usize, usize)>,
    pub dec: Vec<Gru>,
    /// `H x 3H` output combination of decoder state and context.
    pub comb_w: usize,
    pub comb_b: usize,
    pub out_w: usize,
    pub out_b: usize,
    pub total: usize,
    pub slots: Vec<Slot>,
}

struct Builder {
    slots: Vec<Slot>,
    total: usize,
}

impl Builder {
    fn add(&mut self, name: String, rows: usize, cols: usize, init: Init) -> usize {
        let offset = self.total;
        self.slots.push(Slot {
            name,
            offset,
            rows,
            cols,
            init,
        });
        self.total += rows * cols;
        offset
    }

    fn gru(&mut self, name: &str, input: usize, hidden: usize) -> Gru {
        Gru {
            w: self.add(format!("{name}.w"), 3 * hidden, input, Init::Matrix),
            u: self.add(format!("{name}.u"), 3 * hidden, hidden, Init::Matrix),
            b: self.add(format!("{name}.b"), 3 * hidden, 1, Init::Zero),
            input,
            hidden,
        }
    }
}

impl Layout {
    pub fn new(
        vocab: usize,
        emb: usize,
        hidden: usize,
        enc_layers: usize,
        dec_layers: usize,
    ) -> Self {
        let h = hidden;
        let mut b = Builder {
            slots: Vec::new(),
            total: 0,
        };
        let src_emb = b.add("src_emb".into(), vocab, emb, Init::Embedding);
        let tgt_emb = b.add("tgt_emb".into(), vocab, emb, Init::Embedding);
        let enc = (0..enc_layers)
            .map(|l| {
                let input = if l == 0 { emb } else { 2 * h };
                [
                    b.gru(&format!("enc{l}.fwd"), input, h),
                    b.gru(&format!("enc{l}.bwd"), input, h),
                ]
            })
            .collect();
        let key = b.add("attn.key".into(), h, 2 * h, Init::Matrix);
        let init = (0..dec_layers)
            .map(|l| {
                (
                    b.add(format!("dec{l}.init.w"), h, 2 * h, Init::Matrix),
                    b.add(format!("dec{l}.init.b"), h, 1, Init::Zero),
                )
            })
            .collect();
        let dec = (0..dec_layers)
            .map(|l| b.gru(&format!("dec{l}"), if l == 0 { emb } else { h }, h))
            .collect();
        let comb_w = b.add("comb.w".into(), h, 3 * h, Init::Matrix);
        let comb_b = b.add("comb.b".into(), h, 1, Init::Zero);
        let out_w = b.add("out.w".into(), vocab, h, Init::Matrix);
        let out_b = b.add("out.b".into(), vocab, 1, Init::Zero);
        Layout {
            vocab,
            emb,
            hidden,
            src_emb,
            tgt_emb,
            enc,
            key,
            init,
            dec,
            comb_w,
            comb_b,
            out_w,
            out_b,
            total: b.total,
            slots: b.slots,
        }
    }
}
