use super::*;
use crate::dataset::{generate_dataset, Label, DEFAULT_EPSILON};
use rand::Rng;

fn tiny_mlp() -> EncoderSpec {
    EncoderSpec::Mlp(MlpSpec { widths: vec![4, 3, 2] })
}

fn tiny_cnn() -> EncoderSpec {
    EncoderSpec::Cnn(CnnSpec { channels: [2, 3], embedding: 2, padding: None })
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Loss with the two branches running separate parameter copies.
fn split_loss(model: &SiameseModel, p1: &[f64], p2: &[f64], samples: &[SamplePair]) -> f64 {
    let net = model.network();
    let k = net.param_count();
    let (w, c) = (p1[k], p1[k + 1]);
    let mut loss = 0.0;
    for s in samples {
        let x1: Vec<f64> = s.x1.as_reals().collect();
        let x2: Vec<f64> = s.x2.as_reals().collect();
        let h1 = net.forward(&p1[..k], &x1, 1).unwrap();
        let h2 = net.forward(&p2[..k], &x2, 1).unwrap();
        let d = distance(h1.output(), h2.output()).unwrap();
        let y = 1.0 / (1.0 + (-(w * d + c)).exp());
        loss += (y - s.label.as_f64()).powi(2);
    }
    loss / samples.len() as f64
}

/// Random weights with nonzero biases, so no pre-activation sits exactly on
/// a ReLU kink, and a head kept away from saturation.
fn jittered(spec: &EncoderSpec, head: Head, seed: u64) -> SiameseModel {
    let mut model = SiameseModel::init(spec, 4, head, seed).unwrap();
    let mut rng = seeded_rng(seed + 100);
    model.params_mut().iter_mut().for_each(|p| *p += rng.random_range(-0.1..0.1));
    model.set_head(0.3, -0.2);
    model
}

fn check_full_fd(spec: &EncoderSpec, head: Head) {
    let ds = generate_dataset(4, DEFAULT_EPSILON, 3, 11).unwrap();
    let mut model = jittered(spec, head, 5);
    let batch = Batch::new(&ds.samples, 16).unwrap();
    let (_, _, grad) = model.evaluate(&batch, true).unwrap();
    let grad = grad.unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for k in 0..model.params().len() {
        let orig = model.params()[k];
        model.params_mut()[k] = orig + h;
        let up = model.evaluate(&batch, false).unwrap().1;
        model.params_mut()[k] = orig - h;
        let down = model.evaluate(&batch, false).unwrap().1;
        model.params_mut()[k] = orig;
        worst = worst.max(rel_err(grad[k], (up - down) / (2.0 * h)));
    }
    assert!(worst < 1e-6, "worst relative error {worst}");
}

#[test]
fn backprop_matches_finite_differences_mlp() {
    check_full_fd(&tiny_mlp(), Head::Logistic);
    check_full_fd(&tiny_mlp(), Head::ExpDecay);
}

#[test]
fn backprop_matches_finite_differences_cnn() {
    check_full_fd(&tiny_cnn(), Head::Logistic);
}

#[test]
fn shared_gradient_is_sum_of_branch_gradients() {
    let ds = generate_dataset(4, DEFAULT_EPSILON, 2, 12).unwrap();
    let model = jittered(&tiny_mlp(), Head::Logistic, 6);
    let batch = Batch::new(&ds.samples, 16).unwrap();
    let grad = model.evaluate(&batch, true).unwrap().2.unwrap();
    let base = model.params().to_vec();
    let h = 1e-5;
    for k in 0..model.network().param_count() {
        let mut branch = [0.0; 2];
        for (side, g) in branch.iter_mut().enumerate() {
            let (mut plus, mut minus) = (base.clone(), base.clone());
            plus[k] += h;
            minus[k] -= h;
            *g = if side == 0 {
                (split_loss(&model, &plus, &base, &ds.samples) - split_loss(&model, &minus, &base, &ds.samples))
                    / (2.0 * h)
            } else {
                (split_loss(&model, &base, &plus, &ds.samples) - split_loss(&model, &base, &minus, &ds.samples))
                    / (2.0 * h)
            };
        }
        assert!(rel_err(grad[k], branch[0] + branch[1]) < 1e-6, "param {k}");
    }
}

#[test]
fn input_jacobian_matches_finite_differences() {
    let model = SiameseModel::init(&EncoderSpec::Mlp(MlpSpec::default()), 4, Head::Logistic, 7).unwrap();
    let net = model.network();
    let mut rng = seeded_rng(8);
    let x: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..1.0)).collect();
    let trace = net.forward(model.encoder_params(), &x, 1).unwrap();
    for _ in 0..5 {
        let (i, j) = (rng.random_range(0..16), rng.random_range(0..32));
        let mut up = vec![0.0; 32];
        up[j] = 1.0;
        let mut scratch = vec![0.0; net.param_count()];
        let gx = net.backward(model.encoder_params(), &trace, &up, &mut scratch);
        let h = 1e-6;
        let mut xp = x.clone();
        xp[i] += h;
        let mut xm = x.clone();
        xm[i] -= h;
        let fd = (model.encode_reals(&xp).unwrap()[j] - model.encode_reals(&xm).unwrap()[j]) / (2.0 * h);
        assert!((gx[i] - fd).abs() < 1e-4);
    }
}

#[test]
fn zero_weights_give_zero_embedding() {
    for spec in [EncoderSpec::Mlp(MlpSpec::default()), EncoderSpec::Cnn(CnnSpec::default())] {
        let m = SiameseModel::init(&spec, 4, Head::Logistic, 1).unwrap();
        let zeros = vec![0.0; m.params().len()];
        let m = SiameseModel::from_params(&spec, 4, Head::Logistic, zeros).unwrap();
        let b = Barcode::from_bitstring("1011001110001101").unwrap();
        assert!(m.encode(&b).unwrap().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn distance_examples() {
    assert_eq!(distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
    assert_eq!(distance(&[0.3, -2.0], &[0.3, -2.0]).unwrap(), 0.0);
    assert!(distance(&[1.0], &[1.0, 2.0]).is_err());
    let mut rng = seeded_rng(2);
    for _ in 0..100 {
        let a: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert_eq!(distance(&a, &b).unwrap(), distance(&b, &a).unwrap());
    }
}

#[test]
fn head_behaviour() {
    let ds = generate_dataset(4, DEFAULT_EPSILON, 5, 3).unwrap();
    let mut m = SiameseModel::init(&tiny_mlp(), 4, Head::Logistic, 2).unwrap();
    m.set_head(0.0, 0.0);
    assert!(ds.samples.iter().all(|s| m.predict_label(s).unwrap() == 0.5));
    m.set_head(1.0, -1.0);
    let x = ds.samples[0].x1.clone();
    let same = SamplePair::new(x.clone(), x, Label::Correlated).unwrap();
    assert!(m.predict_label(&same).unwrap() < 0.5);
    let mut last = 0.0;
    for d in [0.0, 0.1, 1.0, 5.0, 20.0] {
        let s = Head::Logistic.eval(d, 1.0, -1.0).0;
        assert!(s > last);
        last = s;
    }
}

#[test]
fn prediction_is_symmetric() {
    let ds = generate_dataset(4, DEFAULT_EPSILON, 5, 4).unwrap();
    for spec in [EncoderSpec::Mlp(MlpSpec::default()), EncoderSpec::Cnn(CnnSpec::default())] {
        let m = SiameseModel::init(&spec, 4, Head::Logistic, 3).unwrap();
        for s in &ds.samples {
            assert_eq!(m.predict_label(s).unwrap(), m.predict_label(&s.exchanged()).unwrap());
        }
    }
}

#[test]
fn batched_scores_match_single_predictions() {
    let ds = generate_dataset(4, DEFAULT_EPSILON, 4, 5).unwrap();
    let m = SiameseModel::init(&EncoderSpec::Cnn(CnnSpec::default()), 4, Head::Logistic, 9).unwrap();
    let scores = m.scores(&ds.samples).unwrap();
    for (s, v) in ds.samples.iter().zip(scores) {
        assert!((m.predict_label(s).unwrap() - v).abs() < 1e-12);
    }
}

#[test]
fn cnn_shapes() {
    assert_eq!(image_shape(10), (32, 32));
    assert_eq!(image_shape(5), (8, 4));
    let net = EncoderSpec::Cnn(CnnSpec::default()).build(10).unwrap();
    // 32 → conv 30 → pool 15 → conv 13 → pool 7
    assert_eq!(net.layers().last().unwrap().input_dim(), 16 * 7 * 7);
    for n in 2..=10 {
        assert_eq!(EncoderSpec::Cnn(CnnSpec::default()).build(n).unwrap().output_dim(), 32);
    }
    let valid = CnnSpec { padding: Some(Padding::Valid), ..Default::default() };
    assert!(EncoderSpec::Cnn(valid).build(2).is_err());
}

#[test]
fn training_fits_small_set_and_is_deterministic() {
    let ds = generate_dataset(4, DEFAULT_EPSILON, 4, 6).unwrap();
    let cfg = SiameseConfig { epochs: 300, lr: 1e-2, ..Default::default() };
    let spec = EncoderSpec::Mlp(MlpSpec::default());
    let (m1, h1) = train_siamese(&ds.samples, &spec, &cfg, 3).unwrap();
    let (m2, h2) = train_siamese(&ds.samples, &spec, &cfg, 3).unwrap();
    assert_eq!(h1, h2);
    assert_eq!(m1.params(), m2.params());
    assert_eq!(h1.len(), 301);
    assert!(h1.last().unwrap().train_loss < h1[0].train_loss);
}

#[test]
fn minibatch_and_early_stop() {
    let ds = generate_dataset(4, DEFAULT_EPSILON, 4, 7).unwrap();
    let spec = EncoderSpec::Mlp(MlpSpec::default());
    let cfg = SiameseConfig { epochs: 50, lr: 1e-2, batch_size: Some(3), ..Default::default() };
    let (_, hist) = train_siamese(&ds.samples, &spec, &cfg, 1).unwrap();
    assert_eq!(hist.len(), 51);
    let cfg = SiameseConfig { epochs: 500, lr: 1e-2, early_stop_loss: Some(0.05), ..Default::default() };
    let (_, hist) = train_siamese(&ds.samples, &spec, &cfg, 1).unwrap();
    let last = hist.last().unwrap();
    assert!(hist.len() == 501 || (last.train_acc == 1.0 && last.train_loss <= 0.05));
    let bad = SiameseConfig { batch_size: Some(0), ..Default::default() };
    assert!(train_siamese(&ds.samples, &spec, &bad, 1).is_err());
}
