//! Siamese baselines: twin encoders sharing one parameter set, a squared
//! Euclidean distance between embeddings, and a scalar head mapping the
//! distance to a label score.
//!
//! Parameters live in one flat vector, encoder first, then the head's
//! `w` and `c`. Both branches of a batch run through the encoder as one
//! stacked batch, so the shared weights collect gradients from each branch.

mod network;

pub use network::{Layer, Network, Trace};

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::dataset::{Barcode, SamplePair};
use crate::optim::AdamState;
use crate::record::{threshold_accuracy, EpochStats};
use crate::{seeded_rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    /// Widths after the input layer; the last one is the linear embedding.
    pub widths: Vec<usize>,
}

impl Default for MlpSpec {
    fn default() -> Self {
        Self { widths: vec![128, 64, 32] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    Valid,
    Same,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CnnSpec {
    pub channels: [usize; 2],
    pub embedding: usize,
    /// `None` picks valid padding for maps of side 8 or more, same below.
    pub padding: Option<Padding>,
}

impl Default for CnnSpec {
    fn default() -> Self {
        Self { channels: [8, 16], embedding: 32, padding: None }
    }
}

/// Image shape of an `N = 2^n` pixel barcode: square for even `n`, twice as
/// tall as wide otherwise.
pub fn image_shape(n: usize) -> (usize, usize) {
    (1 << n.div_ceil(2), 1 << (n / 2))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EncoderSpec {
    Mlp(MlpSpec),
    Cnn(CnnSpec),
}

impl EncoderSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EncoderSpec::Mlp(_) => "dnn",
            EncoderSpec::Cnn(_) => "cnn",
        }
    }

    /// Lays out the encoder for barcodes of `2^n` pixels.
    pub fn build(&self, n: usize) -> Result<Network> {
        let pixels = 1usize << n;
        let mut layers = Vec::new();
        match self {
            EncoderSpec::Mlp(spec) => {
                if spec.widths.is_empty() || spec.widths.contains(&0) {
                    return Err(Error::InvalidParameter("layer widths must be positive"));
                }
                let mut input = pixels;
                for (k, &output) in spec.widths.iter().enumerate() {
                    let relu = k + 1 < spec.widths.len();
                    layers.push(Layer::Dense { input, output, relu, offset: 0 });
                    input = output;
                }
            }
            EncoderSpec::Cnn(spec) => {
                if spec.channels.contains(&0) || spec.embedding == 0 {
                    return Err(Error::InvalidParameter("channel counts must be positive"));
                }
                let (mut h, mut w) = image_shape(n);
                let padding = spec.padding.unwrap_or(if h.min(w) >= 8 { Padding::Valid } else { Padding::Same });
                let pad = usize::from(padding == Padding::Same);
                let mut c = 1;
                for &c_out in &spec.channels {
                    let conv = Layer::Conv { c_in: c, c_out, h, w, pad, offset: 0 };
                    if h + 2 * pad < 3 || w + 2 * pad < 3 {
                        return Err(Error::InvalidParameter("image too small for valid padding"));
                    }
                    let (ch, cw) = conv.output_hw().expect("conv");
                    layers.push(conv);
                    layers.push(Layer::MaxPool { c: c_out, h: ch, w: cw });
                    (h, w, c) = (ch.div_ceil(2), cw.div_ceil(2), c_out);
                }
                layers.push(Layer::Dense { input: c * h * w, output: spec.embedding, relu: false, offset: 0 });
            }
        }
        let mut next = 0;
        for l in &mut layers {
            let count = l.param_count();
            if let Layer::Dense { offset, .. } | Layer::Conv { offset, .. } = l {
                *offset = next;
            }
            next += count;
        }
        Network::new(layers)
    }
}

/// Squared Euclidean distance.
pub fn distance(h1: &[f64], h2: &[f64]) -> Result<f64> {
    if h1.len() != h2.len() {
        return Err(Error::SizeMismatch { expected: h1.len(), found: h2.len() });
    }
    Ok(h1.iter().zip(h2).map(|(a, b)| (a - b) * (a - b)).sum())
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Head {
    /// `σ(w·d + c)`.
    #[default]
    Logistic,
    /// `1 − exp(−d)`; ignores `w` and `c`.
    ExpDecay,
}

impl Head {
    /// Score and `∂score/∂d`, `∂score/∂w`, `∂score/∂c`.
    fn eval(self, d: f64, w: f64, c: f64) -> (f64, [f64; 3]) {
        match self {
            Head::Logistic => {
                let s = sigmoid(w * d + c);
                let ds = s * (1.0 - s);
                (s, [ds * w, ds * d, ds])
            }
            Head::ExpDecay => {
                let e = libm::exp(-d);
                (1.0 - e, [e, 0.0, 0.0])
            }
        }
    }
}

pub const HEAD_PARAMS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SiameseModel {
    spec: EncoderSpec,
    n: usize,
    network: Network,
    head: Head,
    /// Encoder parameters followed by `w` and `c`.
    params: Vec<f64>,
}

impl SiameseModel {
    /// Random encoder, head `w = 1`, `c = −1`.
    pub fn init(spec: &EncoderSpec, n: usize, head: Head, seed: u64) -> Result<Self> {
        let network = spec.build(n)?;
        let mut params = network.init_params(&mut seeded_rng(seed));
        params.extend([1.0, -1.0]);
        Ok(Self { spec: spec.clone(), n, network, head, params })
    }

    pub fn from_params(spec: &EncoderSpec, n: usize, head: Head, params: Vec<f64>) -> Result<Self> {
        let network = spec.build(n)?;
        if params.len() != network.param_count() + HEAD_PARAMS {
            return Err(Error::SizeMismatch { expected: network.param_count() + HEAD_PARAMS, found: params.len() });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite { what: "network parameter" });
        }
        Ok(Self { spec: spec.clone(), n, network, head, params })
    }

    pub fn spec(&self) -> &EncoderSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn encoder_params(&self) -> &[f64] {
        &self.params[..self.network.param_count()]
    }

    pub fn head_params(&self) -> (f64, f64) {
        let k = self.network.param_count();
        (self.params[k], self.params[k + 1])
    }

    pub fn set_head(&mut self, w: f64, c: f64) {
        let k = self.network.param_count();
        self.params[k] = w;
        self.params[k + 1] = c;
    }

    /// Mean squared distance between the two branches of a batch.
    pub fn mean_distance(&self, batch: &Batch) -> Result<f64> {
        let m = batch.labels.len();
        let trace = self.network.forward(self.encoder_params(), &batch.inputs, 2 * m)?;
        let (e, out) = (self.network.output_dim(), trace.output());
        let mut total = 0.0;
        for i in 0..m {
            total += distance(&out[i * e..(i + 1) * e], &out[(m + i) * e..(m + i + 1) * e])?;
        }
        Ok(total / m as f64)
    }

    /// `w = 1/d̄`, `c = −1`, so `w·d + c` starts near zero instead of deep
    /// in the saturated tail. Leaves `w = 1` when every distance is zero.
    pub fn calibrate_head(&mut self, batch: &Batch) -> Result<()> {
        let d = self.mean_distance(batch)?;
        let w = if d > 0.0 && d.is_finite() { 1.0 / d } else { 1.0 };
        self.set_head(w, -1.0);
        Ok(())
    }

    /// Embedding of a real-valued input of `2^n` entries.
    pub fn encode_reals(&self, x: &[f64]) -> Result<Vec<f64>> {
        let trace = self.network.forward(self.encoder_params(), x, 1)?;
        Ok(trace.output().to_vec())
    }

    pub fn encode(&self, b: &Barcode) -> Result<Vec<f64>> {
        let x: Vec<f64> = b.as_reals().collect();
        self.encode_reals(&x)
    }

    /// Label score in `(0, 1)`; above one half means "uncorrelated".
    pub fn predict_label(&self, pair: &SamplePair) -> Result<f64> {
        let d = distance(&self.encode(&pair.x1)?, &self.encode(&pair.x2)?)?;
        let (w, c) = self.head_params();
        Ok(self.head.eval(d, w, c).0)
    }

    pub fn scores(&self, samples: &[SamplePair]) -> Result<Vec<f64>> {
        if samples.is_empty() {
            return Ok(Vec::new());
        }
        let batch = Batch::new(samples, self.network.input_dim())?;
        Ok(self.evaluate(&batch, false)?.0)
    }

    pub fn accuracy(&self, samples: &[SamplePair]) -> Result<f64> {
        let scores = self.scores(samples)?;
        let labels: Vec<f64> = samples.iter().map(|s| s.label.as_f64()).collect();
        Ok(threshold_accuracy(&scores, &labels))
    }

    /// Scores, MSE and (optionally) its gradient over the flat parameters.
    pub fn evaluate(&self, batch: &Batch, with_grad: bool) -> Result<(Vec<f64>, f64, Option<Vec<f64>>)> {
        let m = batch.labels.len();
        let enc = self.encoder_params();
        let trace = self.network.forward(enc, &batch.inputs, 2 * m)?;
        let e = self.network.output_dim();
        let out = trace.output();
        let (w, c) = self.head_params();
        let mut scores = Vec::with_capacity(m);
        let mut loss = 0.0;
        let mut upstream = vec![0.0; 2 * m * e];
        let (mut gw, mut gc) = (0.0, 0.0);
        for i in 0..m {
            let (h1, h2) = (&out[i * e..(i + 1) * e], &out[(m + i) * e..(m + i + 1) * e]);
            let d = distance(h1, h2)?;
            let (s, [dd, dw, dc]) = self.head.eval(d, w, c);
            let r = s - batch.labels[i];
            loss += r * r;
            scores.push(s);
            let gs = 2.0 * r / m as f64;
            gw += gs * dw;
            gc += gs * dc;
            let gd = gs * dd;
            for k in 0..e {
                let diff = 2.0 * (h1[k] - h2[k]) * gd;
                upstream[i * e + k] = diff;
                upstream[(m + i) * e + k] = -diff;
            }
        }
        loss /= m as f64;
        if !with_grad {
            return Ok((scores, loss, None));
        }
        let mut grad = vec![0.0; self.params.len()];
        let k = self.network.param_count();
        self.network.backward_params(enc, &trace, &upstream, &mut grad[..k]);
        grad[k] = gw;
        grad[k + 1] = gc;
        Ok((scores, loss, Some(grad)))
    }
}

/// Pairs stacked as `[x1 of every pair; x2 of every pair]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub inputs: Vec<f64>,
    pub labels: Vec<f64>,
}

impl Batch {
    pub fn new(samples: &[SamplePair], input_dim: usize) -> Result<Self> {
        let mut inputs = Vec::with_capacity(2 * samples.len() * input_dim);
        for s in samples {
            if s.x1.len() != input_dim {
                return Err(Error::SizeMismatch { expected: input_dim, found: s.x1.len() });
            }
            inputs.extend(s.x1.as_reals());
        }
        for s in samples {
            inputs.extend(s.x2.as_reals());
        }
        Ok(Self { inputs, labels: samples.iter().map(|s| s.label.as_f64()).collect() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiameseConfig {
    pub lr: f64,
    pub epochs: usize,
    /// `None` trains full batch.
    pub batch_size: Option<usize>,
    /// Stop once every training pair is classified correctly and the loss
    /// is at or below this value.
    pub early_stop_loss: Option<f64>,
    pub head: Head,
    /// Start the logistic head at `w = 1/d̄`, `c = −1`, with `d̄` the mean
    /// initial distance over the training pairs, instead of `w = 1`.
    pub calibrate_head: bool,
}

impl Default for SiameseConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            epochs: 300,
            batch_size: None,
            early_stop_loss: None,
            head: Head::Logistic,
            calibrate_head: true,
        }
    }
}

/// Adam on the MSE. Row `e` of the history is measured on the full
/// training set after `e` epochs.
pub fn train_siamese(
    train: &[SamplePair],
    spec: &EncoderSpec,
    cfg: &SiameseConfig,
    seed: u64,
) -> Result<(SiameseModel, Vec<EpochStats>)> {
    let n = train.first().ok_or(Error::InvalidParameter("empty training set"))?.qubits();
    if cfg.batch_size == Some(0) {
        return Err(Error::InvalidParameter("batch size must be positive"));
    }
    let mut model = SiameseModel::init(spec, n, cfg.head, seed)?;
    let mut rng = seeded_rng(seed ^ 0x5eed_ba7c_4000_0000);
    let full = Batch::new(train, model.network.input_dim())?;
    if cfg.calibrate_head {
        model.calibrate_head(&full)?;
    }
    let mut adam = AdamState::new(model.params.len(), cfg.lr);
    let mut history = Vec::with_capacity(cfg.epochs + 1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..=cfg.epochs {
        let full_batch = cfg.batch_size.is_none_or(|b| b >= train.len());
        let (scores, loss, grad) = model.evaluate(&full, full_batch)?;
        let acc = threshold_accuracy(&scores, &full.labels);
        history.push(EpochStats { epoch, train_loss: loss, train_acc: acc });
        let done = cfg.early_stop_loss.is_some_and(|t| acc == 1.0 && loss <= t);
        if epoch == cfg.epochs || done {
            break;
        }
        if full_batch {
            adam.step(&mut model.params, &grad.expect("requested"));
            continue;
        }
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size.expect("minibatch")) {
            let picked: Vec<SamplePair> = chunk.iter().map(|&i| train[i].clone()).collect();
            let batch = Batch::new(&picked, model.network.input_dim())?;
            let (_, _, g) = model.evaluate(&batch, true)?;
            adam.step(&mut model.params, &g.expect("requested"));
        }
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests;
