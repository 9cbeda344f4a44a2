//! Layer stack with batched forward and reverse passes over a flat
//! parameter vector.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::{Error, Result};

/// 3×3 kernels throughout.
const K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    /// Weights stored input-major (`w[i * output + j]`), then biases.
    Dense { input: usize, output: usize, relu: bool, offset: usize },
    /// Channel-major feature maps; weights `[c_out][c_in][3][3]`, then biases.
    Conv { c_in: usize, c_out: usize, h: usize, w: usize, pad: usize, offset: usize },
    /// 2×2 stride 2; windows hanging past an odd edge are clipped.
    MaxPool { c: usize, h: usize, w: usize },
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        match *self {
            Layer::Dense { input, .. } => input,
            Layer::Conv { c_in, h, w, .. } => c_in * h * w,
            Layer::MaxPool { c, h, w } => c * h * w,
        }
    }

    pub fn output_dim(&self) -> usize {
        match *self {
            Layer::Dense { output, .. } => output,
            Layer::Conv { c_out, h, w, pad, .. } => c_out * (h + 2 * pad - K + 1) * (w + 2 * pad - K + 1),
            Layer::MaxPool { c, h, w } => c * h.div_ceil(2) * w.div_ceil(2),
        }
    }

    pub fn param_count(&self) -> usize {
        match *self {
            Layer::Dense { input, output, .. } => input * output + output,
            Layer::Conv { c_in, c_out, .. } => c_out * c_in * K * K + c_out,
            Layer::MaxPool { .. } => 0,
        }
    }

    /// Output map height and width of a convolution or pooling layer.
    pub fn output_hw(&self) -> Option<(usize, usize)> {
        match *self {
            Layer::Dense { .. } => None,
            Layer::Conv { h, w, pad, .. } => Some((h + 2 * pad - K + 1, w + 2 * pad - K + 1)),
            Layer::MaxPool { h, w, .. } => Some((h.div_ceil(2), w.div_ceil(2))),
        }
    }
}

const LANES: usize = 8;

/// Dot product with independent partial sums, so the reduction vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; LANES];
    let (ca, cb) = (a.chunks_exact(LANES), b.chunks_exact(LANES));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..LANES {
            acc[i] += x[i] * y[i];
        }
    }
    acc.iter().sum::<f64>() + tail
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(d, s)| *d += alpha * s);
}

/// `out[p] = bias + Σ_t kern[t]·col[t][p]`, accumulating `LANES` positions
/// at a time in registers.
fn conv_rows(kern: &[f64], bias: f64, col: &[f64], npos: usize, out: &mut [f64]) {
    let mut p = 0;
    while p + LANES <= npos {
        let mut acc = [bias; LANES];
        for (t, &kv) in kern.iter().enumerate() {
            let c = &col[t * npos + p..t * npos + p + LANES];
            for i in 0..LANES {
                acc[i] += kv * c[i];
            }
        }
        out[p..p + LANES].copy_from_slice(&acc);
        p += LANES;
    }
    for q in p..npos {
        out[q] = bias + kern.iter().enumerate().map(|(t, &kv)| kv * col[t * npos + q]).sum::<f64>();
    }
}

/// Output rows and columns a kernel tap touches without leaving the image,
/// and the input offset feeding the first of them.
struct Tap {
    rows: core::ops::Range<usize>,
    cols: core::ops::Range<usize>,
    ky: usize,
    ix0: usize,
}

impl Tap {
    fn new(t: usize, pad: usize, h: usize, w: usize, oh: usize, ow: usize) -> Self {
        let (ky, kx) = (t / K, t % K);
        let rows = pad.saturating_sub(ky)..oh.min(h + pad - ky);
        let cols = pad.saturating_sub(kx)..ow.min(w + pad - kx);
        let ix0 = cols.start + kx - pad;
        Tap { rows, cols, ky, ix0 }
    }

    fn src(&self, oy: usize, pad: usize, w: usize) -> usize {
        (oy + self.ky - pad) * w + self.ix0
    }
}

/// Unrolls one sample into rows `(c_in, ky, kx)` by columns `(oy, ox)`;
/// taps falling into the padding stay zero.
#[allow(clippy::too_many_arguments)]
fn im2col(x: &[f64], col: &mut [f64], c_in: usize, h: usize, w: usize, pad: usize, oh: usize, ow: usize) {
    let npos = oh * ow;
    for ci in 0..c_in {
        let plane = &x[ci * h * w..(ci + 1) * h * w];
        for t in 0..K * K {
            let tap = Tap::new(t, pad, h, w, oh, ow);
            let row = &mut col[(ci * K * K + t) * npos..(ci * K * K + t + 1) * npos];
            if pad > 0 {
                row.iter_mut().for_each(|v| *v = 0.0);
            }
            let len = tap.cols.len();
            for oy in tap.rows.clone() {
                let s = tap.src(oy, pad, w);
                row[oy * ow + tap.cols.start..][..len].copy_from_slice(&plane[s..s + len]);
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters column gradients back onto the image.
#[allow(clippy::too_many_arguments)]
fn col2im(gcol: &[f64], gx: &mut [f64], c_in: usize, h: usize, w: usize, pad: usize, oh: usize, ow: usize) {
    let npos = oh * ow;
    for ci in 0..c_in {
        let plane = &mut gx[ci * h * w..(ci + 1) * h * w];
        for t in 0..K * K {
            let tap = Tap::new(t, pad, h, w, oh, ow);
            let row = &gcol[(ci * K * K + t) * npos..(ci * K * K + t + 1) * npos];
            let len = tap.cols.len();
            for oy in tap.rows.clone() {
                let s = tap.src(oy, pad, w);
                plane[s..s + len].iter_mut().zip(&row[oy * ow + tap.cols.start..][..len]).for_each(|(d, v)| *d += v);
            }
        }
    }
}

/// Per-batch activations kept for the reverse pass.
#[derive(Debug, Clone)]
pub struct Trace {
    batch: usize,
    /// `acts[l]` is the input of layer `l`; the last entry is the output.
    acts: Vec<Vec<f64>>,
    /// Flat argmax indices of each pooling layer, per output cell.
    argmax: Vec<Vec<usize>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("trace holds the input at least")
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    layers: Vec<Layer>,
    params: usize,
}

impl Network {
    /// Chains layers, checking that each input matches the previous output.
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidParameter("network needs at least one layer"));
        }
        let mut expected_offset = 0;
        for pair in layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::SizeMismatch { expected: pair[0].output_dim(), found: pair[1].input_dim() });
            }
        }
        for l in &layers {
            if let Layer::Dense { offset, .. } | Layer::Conv { offset, .. } = *l {
                if offset != expected_offset {
                    return Err(Error::InvalidParameter("layer offsets must tile the parameter vector"));
                }
            }
            if let Layer::Conv { h, w, pad, .. } = *l {
                if h + 2 * pad < K || w + 2 * pad < K {
                    return Err(Error::InvalidParameter("feature map smaller than the kernel"));
                }
            }
            expected_offset += l.param_count();
        }
        Ok(Self { layers, params: expected_offset })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.params
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// He-uniform weights for ReLU layers, Glorot-uniform for the linear
    /// output layer, zero biases.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut p = vec![0.0; self.params];
        for l in &self.layers {
            let (offset, weights, fan_in, fan_out, relu) = match *l {
                Layer::Dense { input, output, relu, offset } => (offset, input * output, input, output, relu),
                Layer::Conv { c_in, c_out, offset, .. } => {
                    (offset, c_out * c_in * K * K, c_in * K * K, c_out * K * K, true)
                }
                Layer::MaxPool { .. } => continue,
            };
            let limit =
                if relu { libm::sqrt(6.0 / fan_in as f64) } else { libm::sqrt(6.0 / (fan_in + fan_out) as f64) };
            for v in &mut p[offset..offset + weights] {
                *v = rng.random_range(-limit..limit);
            }
        }
        p
    }

    /// Forward pass over `batch` rows of `input_dim` values each.
    pub fn forward(&self, params: &[f64], input: &[f64], batch: usize) -> Result<Trace> {
        if params.len() != self.params {
            return Err(Error::SizeMismatch { expected: self.params, found: params.len() });
        }
        if input.len() != batch * self.input_dim() {
            return Err(Error::SizeMismatch { expected: batch * self.input_dim(), found: input.len() });
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut argmax = Vec::new();
        acts.push(input.to_vec());
        for l in &self.layers {
            let x = acts.last().expect("non-empty");
            let mut y = vec![0.0; batch * l.output_dim()];
            match *l {
                Layer::Dense { input, output, relu, offset } => {
                    let (w, bias) = params[offset..offset + input * output + output].split_at(input * output);
                    for (xr, yr) in x.chunks_exact(input).zip(y.chunks_exact_mut(output)) {
                        yr.copy_from_slice(bias);
                        for (i, &xi) in xr.iter().enumerate() {
                            if xi != 0.0 {
                                axpy(xi, &w[i * output..(i + 1) * output], yr);
                            }
                        }
                        if relu {
                            yr.iter_mut().for_each(|v| *v = v.max(0.0));
                        }
                    }
                }
                Layer::Conv { c_in, c_out, h, w, pad, offset } => {
                    let (oh, ow) = l.output_hw().expect("conv");
                    let (taps, npos) = (c_in * K * K, oh * ow);
                    let (kern, bias) = params[offset..offset + c_out * taps + c_out].split_at(c_out * taps);
                    let mut col = vec![0.0; taps * npos];
                    for (xr, yr) in x.chunks_exact(l.input_dim()).zip(y.chunks_exact_mut(l.output_dim())) {
                        im2col(xr, &mut col, c_in, h, w, pad, oh, ow);
                        for (co, out) in yr.chunks_exact_mut(npos).enumerate() {
                            conv_rows(&kern[co * taps..(co + 1) * taps], bias[co], &col, npos, out);
                            out.iter_mut().for_each(|v| *v = v.max(0.0));
                        }
                    }
                }
                Layer::MaxPool { c, h, w } => {
                    let (oh, ow) = l.output_hw().expect("pool");
                    let mut idx = vec![0usize; batch * l.output_dim()];
                    let (din, dout) = (l.input_dim(), l.output_dim());
                    for ((xr, yr), ir) in
                        x.chunks_exact(din).zip(y.chunks_exact_mut(dout)).zip(idx.chunks_exact_mut(dout))
                    {
                        for ch in 0..c {
                            for oy in 0..oh {
                                let r0 = ch * h * w + 2 * oy * w;
                                let r1 = if 2 * oy + 1 < h { r0 + w } else { r0 };
                                for ox in 0..ow {
                                    let c0 = 2 * ox;
                                    let c1 = if c0 + 1 < w { c0 + 1 } else { c0 };
                                    let mut best = r0 + c0;
                                    for k in [r0 + c1, r1 + c0, r1 + c1] {
                                        if xr[k] > xr[best] {
                                            best = k;
                                        }
                                    }
                                    let o = (ch * oh + oy) * ow + ox;
                                    yr[o] = xr[best];
                                    ir[o] = best;
                                }
                            }
                        }
                    }
                    argmax.push(idx);
                }
            }
            acts.push(y);
        }
        Ok(Trace { batch, acts, argmax })
    }

    /// Reverse pass: accumulates `∂/∂params` of `Σ upstream·output` into
    /// `grad` and returns the gradient with respect to the input batch.
    pub fn backward(&self, params: &[f64], trace: &Trace, upstream: &[f64], grad: &mut [f64]) -> Vec<f64> {
        self.backward_impl(params, trace, upstream, grad, true)
    }

    /// Like [`Network::backward`] without the input gradient.
    pub fn backward_params(&self, params: &[f64], trace: &Trace, upstream: &[f64], grad: &mut [f64]) {
        self.backward_impl(params, trace, upstream, grad, false);
    }

    fn backward_impl(
        &self,
        params: &[f64],
        trace: &Trace,
        upstream: &[f64],
        grad: &mut [f64],
        input_grad: bool,
    ) -> Vec<f64> {
        let batch = trace.batch;
        assert_eq!(upstream.len(), batch * self.output_dim());
        assert_eq!(grad.len(), self.params);
        let mut g = upstream.to_vec();
        let mut pool_slot = trace.argmax.len();
        for (li, l) in self.layers.iter().enumerate().rev() {
            let x = &trace.acts[li];
            let y = &trace.acts[li + 1];
            let want_input = input_grad || li > 0;
            let mut gx = vec![0.0; batch * l.input_dim()];
            match *l {
                Layer::Dense { input, output, relu, offset } => {
                    if relu {
                        g.iter_mut().zip(y).for_each(|(gv, &yv)| {
                            if yv <= 0.0 {
                                *gv = 0.0;
                            }
                        });
                    }
                    let w = &params[offset..offset + input * output];
                    let (gw, gb) = grad[offset..offset + input * output + output].split_at_mut(input * output);
                    for ((xr, gr), gxr) in
                        x.chunks_exact(input).zip(g.chunks_exact(output)).zip(gx.chunks_exact_mut(input))
                    {
                        gb.iter_mut().zip(gr).for_each(|(a, b)| *a += b);
                        for i in 0..input {
                            let wrow = &w[i * output..(i + 1) * output];
                            if want_input {
                                gxr[i] = dot(wrow, gr);
                            }
                            let xi = xr[i];
                            if xi != 0.0 {
                                axpy(xi, gr, &mut gw[i * output..(i + 1) * output]);
                            }
                        }
                    }
                }
                Layer::Conv { c_in, c_out, h, w, pad, offset } => {
                    g.iter_mut().zip(y).for_each(|(gv, &yv)| {
                        if yv <= 0.0 {
                            *gv = 0.0;
                        }
                    });
                    let (oh, ow) = l.output_hw().expect("conv");
                    let (taps, npos) = (c_in * K * K, oh * ow);
                    let kern = &params[offset..offset + c_out * taps];
                    let (gk, gb) = grad[offset..offset + c_out * taps + c_out].split_at_mut(c_out * taps);
                    let mut col = vec![0.0; taps * npos];
                    let mut gcol = vec![0.0; taps * npos];
                    for b in 0..batch {
                        let xr = &x[b * l.input_dim()..(b + 1) * l.input_dim()];
                        let gr = &g[b * l.output_dim()..(b + 1) * l.output_dim()];
                        im2col(xr, &mut col, c_in, h, w, pad, oh, ow);
                        gcol.iter_mut().for_each(|v| *v = 0.0);
                        for (co, go) in gr.chunks_exact(npos).enumerate() {
                            gb[co] += go.iter().sum::<f64>();
                            let krow = &kern[co * taps..(co + 1) * taps];
                            let gkrow = &mut gk[co * taps..(co + 1) * taps];
                            for t in 0..taps {
                                let c = &col[t * npos..(t + 1) * npos];
                                gkrow[t] += dot(c, go);
                                if want_input {
                                    axpy(krow[t], go, &mut gcol[t * npos..(t + 1) * npos]);
                                }
                            }
                        }
                        if want_input {
                            col2im(&gcol, &mut gx[b * l.input_dim()..(b + 1) * l.input_dim()], c_in, h, w, pad, oh, ow);
                        }
                    }
                }
                Layer::MaxPool { .. } => {
                    pool_slot -= 1;
                    let idx = &trace.argmax[pool_slot];
                    let (din, dout) = (l.input_dim(), l.output_dim());
                    for b in 0..batch {
                        for o in 0..dout {
                            gx[b * din + idx[b * dout + o]] += g[b * dout + o];
                        }
                    }
                }
            }
            g = gx;
        }
        g
    }
}
