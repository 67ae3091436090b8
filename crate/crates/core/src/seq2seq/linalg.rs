//! Dense row-major kernels on `f64` slices.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `out += W x` for a `rows x cols` matrix `w`.
pub fn gemv(w: &[f64], cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(x.len(), cols);
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        *o += dot(row, x);
    }
}

/// `dx += Wᵀ dy`.
pub fn gemv_t(w: &[f64], cols: usize, dy: &[f64], dx: &mut [f64]) {
    for (&d, row) in dy.iter().zip(w.chunks_exact(cols)) {
        if d != 0.0 {
            axpy(d, row, dx);
        }
    }
}

/// `G += dy ⊗ x`.
pub fn outer_add(g: &mut [f64], cols: usize, dy: &[f64], x: &[f64]) {
    for (&d, row) in dy.iter().zip(g.chunks_exact_mut(cols)) {
        if d != 0.0 {
            axpy(d, x, row);
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// In-place log-softmax.
pub fn log_softmax(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    for x in v.iter_mut() {
        *x -= lse;
    }
}

pub fn softmax(v: &mut [f64]) {
    log_softmax(v);
    for x in v.iter_mut() {
        *x = x.exp();
    }
}

pub fn norm_sq(v: &[f64]) -> f64 {
    dot(v, v)
}
