//! Variational model: `h(x) = ⟨φ_x| W†(θ) O W(θ) |φ_x⟩`, prediction `a·h + b`.
//!
//! `W(θ)` is a stack of layers, each applying `exp(−iθ_g G_g)` for every
//! generator `G_g` in the layer, in order. Generators come from the
//! equivariant pool and are exponentiated in closed form.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::dataset::SamplePair;
use crate::observable::{ObservableExpr, PauliString, Primitive};
use crate::optim::AdamState;
use crate::record::{threshold_accuracy, EpochStats};
use crate::statevec::{expectation, RegisterState};
use crate::symmetry::{certify, GeneratorKind, PoolOp};
use crate::{seeded_rng, Error, Result, C64};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnsatzSpec {
    pub layers: usize,
    /// Generators of one layer, applied in order.
    pub generators: Vec<PoolOp>,
}

impl Default for AnsatzSpec {
    fn default() -> Self {
        Self { layers: 3, generators: vec![PoolOp::SumY, PoolOp::SumXX, PoolOp::SumYY, PoolOp::Swap] }
    }
}

impl AnsatzSpec {
    pub fn with_layers(layers: usize) -> Self {
        Self { layers, ..Self::default() }
    }

    pub fn num_angles(&self) -> usize {
        self.layers * self.generators.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Rotation {
    /// Commuting Pauli strings, each an involution.
    Strings(Vec<PauliString>),
    Involution(ObservableExpr),
}

/// `exp(−iθP)` in place for a Pauli string `P`.
fn rotate_string(amps: &mut [C64], p: &PauliString, theta: f64) {
    let (flip, sign, phase) = p.masks();
    let (c, s) = (libm::cos(theta), libm::sin(theta));
    let minus_is = C64::new(0.0, -s);
    let parity = |i: usize| if (i & sign).count_ones().is_multiple_of(2) { phase } else { -phase };
    if flip == 0 {
        for (i, a) in amps.iter_mut().enumerate() {
            *a *= C64::new(c, 0.0) + minus_is * parity(i);
        }
        return;
    }
    for i in 0..amps.len() {
        let j = i ^ flip;
        if j < i {
            continue;
        }
        let (a, b) = (amps[i], amps[j]);
        // P|j⟩ = parity(j)|i⟩, P|i⟩ = parity(i)|j⟩
        amps[i] = a * c + minus_is * parity(j) * b;
        amps[j] = b * c + minus_is * parity(i) * a;
    }
}

/// Compiled ansatz at a fixed register size.
#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    n: usize,
    spec: AnsatzSpec,
    gates: Vec<Rotation>,
}

impl Ansatz {
    /// Checks that every generator is a certified, exponentiable pool member.
    pub fn new(spec: &AnsatzSpec, n: usize) -> Result<Self> {
        if spec.layers == 0 || spec.generators.is_empty() {
            return Err(Error::InvalidParameter("ansatz needs at least one layer and one generator"));
        }
        let mut per_layer = Vec::with_capacity(spec.generators.len());
        for &op in &spec.generators {
            if !certify(op)?.generator {
                return Err(Error::NotGenerator { name: op.name().into() });
            }
            let expr = op.instantiate(n);
            let rot = match (op.generator_kind(), expr.factors()) {
                (GeneratorKind::CommutingSum, [Primitive::PauliSum(sum)]) => {
                    Rotation::Strings(sum.terms.iter().map(|(_, s)| s.clone()).collect())
                }
                (GeneratorKind::Involution, [Primitive::PauliString(s)]) => Rotation::Strings(vec![s.clone()]),
                (GeneratorKind::Involution, _) => Rotation::Involution(expr),
                _ => return Err(Error::NotGenerator { name: op.name().into() }),
            };
            per_layer.push(rot);
        }
        let gates = (0..spec.layers).flat_map(|_| per_layer.iter().cloned()).collect();
        Ok(Self { n, spec: spec.clone(), gates })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> &AnsatzSpec {
        &self.spec
    }

    pub fn num_angles(&self) -> usize {
        self.gates.len()
    }

    /// Number of involutive terms generator `k` splits into.
    pub fn terms(&self, k: usize) -> usize {
        match &self.gates[k] {
            Rotation::Strings(strings) => strings.len(),
            Rotation::Involution(_) => 1,
        }
    }

    pub fn apply_in_place(&self, amps: &mut [C64], theta: &[f64]) {
        self.apply_offset(amps, theta, None);
    }

    /// Applies `W(θ)` with term `term` of generator `gate` rotated by
    /// `θ_gate + offset` while its other terms keep `θ_gate`.
    pub fn apply_term_offset(&self, amps: &mut [C64], theta: &[f64], gate: usize, term: usize, offset: f64) {
        self.apply_offset(amps, theta, Some((gate, term, offset)));
    }

    fn apply_offset(&self, amps: &mut [C64], theta: &[f64], shift: Option<(usize, usize, f64)>) {
        assert_eq!(theta.len(), self.gates.len(), "one angle per generator per layer");
        for (k, (gate, &t)) in self.gates.iter().zip(theta).enumerate() {
            let angle = |term: usize| match shift {
                Some((g, j, d)) if g == k && j == term => t + d,
                _ => t,
            };
            match gate {
                Rotation::Strings(strings) => {
                    for (j, s) in strings.iter().enumerate() {
                        let a = angle(j);
                        if a != 0.0 {
                            rotate_string(amps, s, a);
                        }
                    }
                }
                Rotation::Involution(g) => {
                    let a = angle(0);
                    if a == 0.0 {
                        continue;
                    }
                    let gv = g.apply(amps);
                    let (c, s) = (libm::cos(a), C64::new(0.0, -libm::sin(a)));
                    for (a, b) in amps.iter_mut().zip(gv) {
                        *a = *a * c + s * b;
                    }
                }
            }
        }
    }

    pub fn apply(&self, state: &RegisterState, theta: &[f64]) -> Result<RegisterState> {
        if state.n() != self.n {
            return Err(Error::SizeMismatch { expected: 1 << (2 * self.n), found: state.amps().len() });
        }
        if theta.len() != self.gates.len() {
            return Err(Error::SizeMismatch { expected: self.gates.len(), found: theta.len() });
        }
        let mut out = state.clone();
        self.apply_in_place(out.amps_mut(), theta);
        Ok(out)
    }
}

/// `W(θ)|v⟩` for a spec at the state's register size.
pub fn apply_ansatz(state: &RegisterState, spec: &AnsatzSpec, theta: &[f64]) -> Result<RegisterState> {
    Ansatz::new(spec, state.n())?.apply(state, theta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzParams {
    pub theta: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl AnsatzParams {
    /// `θ ~ U(−scale, scale)`, `a = 1`, `b = 0`.
    pub fn random<R: Rng + ?Sized>(angles: usize, scale: f64, rng: &mut R) -> Self {
        let theta = (0..angles).map(|_| rng.random_range(-scale..scale)).collect();
        Self { theta, a: 1.0, b: 0.0 }
    }

    pub fn zeros(angles: usize) -> Self {
        Self { theta: vec![0.0; angles], a: 1.0, b: 0.0 }
    }

    /// `[θ…, a, b]`, the optimizer's layout.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.theta.clone();
        v.push(self.a);
        v.push(self.b);
        v
    }

    pub fn from_flat(flat: &[f64]) -> Self {
        let k = flat.len() - 2;
        Self { theta: flat[..k].to_vec(), a: flat[k], b: flat[k + 1] }
    }
}

/// Raw expectation `h = ⟨v| W† O W |v⟩`.
pub fn raw_expectation(ansatz: &Ansatz, state: &RegisterState, theta: &[f64], o: &ObservableExpr) -> Result<f64> {
    expectation(&ansatz.apply(state, theta)?, o)
}

/// Prediction `a·h + b` for one pair.
pub fn model_eval(pair: &SamplePair, ansatz: &Ansatz, params: &AnsatzParams, o: &ObservableExpr) -> Result<f64> {
    let state = RegisterState::encode(&pair.x1, &pair.x2)?;
    Ok(params.a * raw_expectation(ansatz, &state, &params.theta, o)? + params.b)
}

/// `(1/M) Σ (pred − y)²`.
pub fn mse_loss(predictions: &[f64], labels: &[f64]) -> f64 {
    assert_eq!(predictions.len(), labels.len());
    if predictions.is_empty() {
        return 0.0;
    }
    predictions.iter().zip(labels).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / predictions.len() as f64
}

/// Exact `∂h/∂θ_k` by the shift rule. Each involutive term `P_j` of
/// generator `k` contributes `h(θ_{k,j} + π/4) − h(θ_{k,j} − π/4)`, shifting
/// that term alone; the terms commute, so the contributions add up.
pub fn parameter_shift(
    ansatz: &Ansatz,
    state: &RegisterState,
    theta: &[f64],
    k: usize,
    o: &ObservableExpr,
) -> Result<f64> {
    if state.n() != ansatz.n() || theta.len() != ansatz.num_angles() || k >= ansatz.num_angles() {
        return Err(Error::SizeMismatch { expected: ansatz.num_angles(), found: theta.len() });
    }
    let shift = core::f64::consts::FRAC_PI_4;
    let mut total = 0.0;
    for term in 0..ansatz.terms(k) {
        let eval = |offset: f64| {
            let mut out = state.clone();
            ansatz.apply_term_offset(out.amps_mut(), theta, k, term, offset);
            expectation(&out, o)
        };
        total += eval(shift)? - eval(-shift)?;
    }
    Ok(total)
}

/// Training set encoded once, with everything the loss needs.
#[derive(Debug, Clone)]
pub struct LossContext<'a> {
    pub ansatz: &'a Ansatz,
    pub observable: &'a ObservableExpr,
    pub states: Vec<RegisterState>,
    pub labels: Vec<f64>,
    pub fd_step: f64,
}

/// Loss, gradient in `[θ…, a, b]` layout, and predictions at the given point.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub loss: f64,
    pub gradient: Vec<f64>,
    pub predictions: Vec<f64>,
}

impl<'a> LossContext<'a> {
    pub fn new(
        ansatz: &'a Ansatz,
        observable: &'a ObservableExpr,
        samples: &[SamplePair],
        fd_step: f64,
    ) -> Result<Self> {
        let states = samples.iter().map(|s| RegisterState::encode(&s.x1, &s.x2)).collect::<Result<Vec<_>>>()?;
        let labels = samples.iter().map(|s| s.label.as_f64()).collect();
        Ok(Self { ansatz, observable, states, labels, fd_step })
    }

    pub fn raw(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.states.iter().map(|s| raw_expectation(self.ansatz, s, theta, self.observable)).collect()
    }

    pub fn loss(&self, params: &AnsatzParams) -> Result<f64> {
        let preds: Vec<f64> = self.raw(&params.theta)?.iter().map(|h| params.a * h + params.b).collect();
        Ok(mse_loss(&preds, &self.labels))
    }

    /// Central differences of step `fd_step` for every angle, analytic
    /// derivatives for `a` and `b`.
    pub fn gradient(&self, params: &AnsatzParams) -> Result<LossGradient> {
        let m = self.labels.len() as f64;
        let raw = self.raw(&params.theta)?;
        let predictions: Vec<f64> = raw.iter().map(|h| params.a * h + params.b).collect();
        let loss = mse_loss(&predictions, &self.labels);
        let mut gradient = Vec::with_capacity(params.theta.len() + 2);
        let mut shifted = params.clone();
        for k in 0..params.theta.len() {
            shifted.theta[k] = params.theta[k] + self.fd_step;
            let up = self.loss(&shifted)?;
            shifted.theta[k] = params.theta[k] - self.fd_step;
            let down = self.loss(&shifted)?;
            shifted.theta[k] = params.theta[k];
            gradient.push((up - down) / (2.0 * self.fd_step));
        }
        let resid: Vec<f64> = predictions.iter().zip(&self.labels).map(|(p, y)| p - y).collect();
        gradient.push(2.0 / m * resid.iter().zip(&raw).map(|(r, h)| r * h).sum::<f64>());
        gradient.push(2.0 / m * resid.iter().sum::<f64>());
        Ok(LossGradient { loss, gradient, predictions })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QnnUConfig {
    pub lr: f64,
    pub epochs: usize,
    pub fd_step: f64,
    /// Angles start in `U(−init_scale, init_scale)`.
    pub init_scale: f64,
    pub observable: PoolOp,
}

impl Default for QnnUConfig {
    fn default() -> Self {
        Self { lr: 0.1, epochs: 200, fd_step: 1e-4, init_scale: 0.1, observable: PoolOp::Swap }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalModel {
    pub ansatz: Ansatz,
    pub observable: ObservableExpr,
    pub observable_op: PoolOp,
    pub params: AnsatzParams,
}

impl VariationalModel {
    pub fn new(spec: &AnsatzSpec, n: usize, observable: PoolOp, params: AnsatzParams) -> Result<Self> {
        let ansatz = Ansatz::new(spec, n)?;
        if params.theta.len() != ansatz.num_angles() {
            return Err(Error::SizeMismatch { expected: ansatz.num_angles(), found: params.theta.len() });
        }
        let entry = certify(observable)?;
        if !entry.hermitian {
            return Err(Error::NotObservable { name: observable.name().into() });
        }
        Ok(Self { ansatz, observable: observable.instantiate(n), observable_op: observable, params })
    }

    pub fn predict(&self, pair: &SamplePair) -> Result<f64> {
        model_eval(pair, &self.ansatz, &self.params, &self.observable)
    }

    pub fn accuracy(&self, samples: &[SamplePair]) -> Result<f64> {
        let scores = samples.iter().map(|s| self.predict(s)).collect::<Result<Vec<_>>>()?;
        let labels: Vec<f64> = samples.iter().map(|s| s.label.as_f64()).collect();
        Ok(threshold_accuracy(&scores, &labels))
    }
}

/// Full-batch Adam on the MSE. Row `e` of the history holds the loss after
/// `e` updates, so row 0 is the initial loss.
pub fn train_qnn_u(
    train: &[SamplePair],
    spec: &AnsatzSpec,
    cfg: &QnnUConfig,
    seed: u64,
) -> Result<(VariationalModel, Vec<EpochStats>)> {
    let n = train.first().ok_or(Error::InvalidParameter("empty training set"))?.qubits();
    let mut rng = seeded_rng(seed);
    let params = AnsatzParams::random(spec.num_angles(), cfg.init_scale, &mut rng);
    let mut model = VariationalModel::new(spec, n, cfg.observable, params)?;
    let ctx = LossContext::new(&model.ansatz, &model.observable, train, cfg.fd_step)?;

    let mut flat = model.params.to_flat();
    let mut adam = AdamState::new(flat.len(), cfg.lr);
    let mut history = Vec::with_capacity(cfg.epochs + 1);
    for epoch in 0..=cfg.epochs {
        let lg = ctx.gradient(&AnsatzParams::from_flat(&flat))?;
        history.push(EpochStats {
            epoch,
            train_loss: lg.loss,
            train_acc: threshold_accuracy(&lg.predictions, &ctx.labels),
        });
        if epoch == cfg.epochs {
            break;
        }
        adam.step(&mut flat, &lg.gradient);
    }
    model.params = AnsatzParams::from_flat(&flat);
    Ok((model, history))
}
