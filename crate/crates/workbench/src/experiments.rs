//! Trial orchestration for the architecture comparison, the sample-size
//! sweep, the system-size sweep and the forrelation oracle check.

use std::time::Instant;

use gqml_core::classical::{train_siamese, CnnSpec, EncoderSpec, Head, MlpSpec, SiameseConfig};
use gqml_core::dataset::{generate_with, Barcode, Dataset, PairSampler, SamplePair};
use gqml_core::qnn_meas::{LassoConfig, MeasurementModel};
use gqml_core::qnn_var::{train_qnn_u, AnsatzSpec, QnnUConfig};
use gqml_core::record::EpochStats;
use gqml_core::statevec::{expectation, forrelation, RegisterState};
use gqml_core::symmetry::{build_pool, PoolOp};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ExperimentConfig, HeadMode, ModelKind};
use crate::error::{Result, WorkbenchError};
use crate::records::{mean_std, sort_records, RunRecord};
use crate::seeds::{data_seed, derive, model_seed, tag, Purpose};

/// One trial's data at one size.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub train: Dataset,
    pub test: Dataset,
}

pub fn sampler(cfg: &ExperimentConfig, n: usize) -> Result<PairSampler> {
    Ok(PairSampler::new(n, cfg.epsilon)?.with_rounding(cfg.rounding.into()))
}

/// Fresh training pairs and a disjoint test set.
pub fn trial_data(cfg: &ExperimentConfig, trial: usize, n: usize, per_class: usize) -> Result<TrialData> {
    let exp = cfg.experiment.id();
    let s = sampler(cfg, n)?;
    let train =
        generate_with(&s, per_class, data_seed(cfg.master_seed, exp, trial, n, per_class, Purpose::Train), &[])?;
    let test = generate_with(
        &s,
        cfg.test_per_class,
        data_seed(cfg.master_seed, exp, trial, n, per_class, Purpose::Test),
        &train.samples,
    )?;
    Ok(TrialData { train, test })
}

/// Training history and test accuracy of one fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub history: Vec<EpochStats>,
    pub test_acc: f64,
}

pub fn siamese_config(cfg: &ExperimentConfig) -> SiameseConfig {
    SiameseConfig {
        lr: cfg.classical.lr,
        epochs: cfg.classical.epochs,
        batch_size: cfg.classical.batch_size,
        early_stop_loss: cfg.classical.early_stop_loss,
        head: match cfg.classical.head {
            HeadMode::Logistic => Head::Logistic,
            HeadMode::ExpDecay => Head::ExpDecay,
        },
        calibrate_head: cfg.classical.calibrate_head,
    }
}

pub fn fit_model(cfg: &ExperimentConfig, model: ModelKind, data: &TrialData, seed: u64) -> Result<Outcome> {
    let (train, test) = (&data.train.samples, &data.test.samples);
    let n = data.train.n;
    match model {
        ModelKind::QnnM => {
            let pool = build_pool(n, cfg.pool_size)?;
            let lasso = LassoConfig { lambda: cfg.lambda, ..LassoConfig::default() };
            let m = MeasurementModel::fit(train, &pool, &lasso)?;
            Ok(Outcome { history: m.epoch_stats(train)?, test_acc: m.accuracy(test)? })
        }
        ModelKind::QnnU => {
            let spec = AnsatzSpec::with_layers(cfg.qnn_u.layers);
            let qcfg = QnnUConfig { lr: cfg.qnn_u.lr, epochs: cfg.qnn_u.epochs, ..QnnUConfig::default() };
            let (m, history) = train_qnn_u(train, &spec, &qcfg, seed)?;
            Ok(Outcome { history, test_acc: m.accuracy(test)? })
        }
        ModelKind::Dnn | ModelKind::Cnn => {
            let spec = if model == ModelKind::Dnn {
                EncoderSpec::Mlp(MlpSpec { widths: cfg.classical.mlp_widths.clone() })
            } else {
                EncoderSpec::Cnn(CnnSpec::default())
            };
            let (m, history) = train_siamese(train, &spec, &siamese_config(cfg), seed)?;
            Ok(Outcome { history, test_acc: m.accuracy(test)? })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Unit {
    n: usize,
    per_class: usize,
    trial: usize,
}

fn run_unit(cfg: &ExperimentConfig, u: Unit) -> Result<Vec<RunRecord>> {
    let data = trial_data(cfg, u.trial, u.n, u.per_class)?;
    let mut out = Vec::new();
    for &model in &cfg.models {
        let seed = model_seed(cfg.master_seed, cfg.experiment.id(), u.trial, u.n, u.per_class, model.id());
        let start = Instant::now();
        let outcome = fit_model(cfg, model, &data, seed)?;
        let wall_ms = start.elapsed().as_millis() as u64;
        let last = outcome.history.len() - 1;
        let rows: Box<dyn Iterator<Item = &EpochStats>> = if cfg.per_epoch_records {
            Box::new(outcome.history.iter())
        } else {
            Box::new(outcome.history.iter().skip(last))
        };
        for (i, e) in rows.enumerate() {
            let is_last = !cfg.per_epoch_records || i == last;
            out.push(RunRecord {
                trial: u.trial,
                model: model.id().into(),
                n: u.n,
                m: 2 * u.per_class,
                epoch: e.epoch,
                train_loss: e.train_loss,
                train_acc: e.train_acc,
                test_acc: is_last.then_some(outcome.test_acc),
                seed,
                wall_ms,
            });
        }
    }
    Ok(out)
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| WorkbenchError::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Every trial × size × model in the configuration, merged in key order.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let units: Vec<Unit> = cfg
        .n
        .iter()
        .flat_map(|&n| {
            cfg.per_class_train
                .iter()
                .flat_map(move |&per_class| (0..cfg.trials).map(move |trial| Unit { n, per_class, trial }))
        })
        .collect();
    let chunks = in_pool(cfg.threads, || units.par_iter().map(|&u| run_unit(cfg, u)).collect::<Result<Vec<_>>>())??;
    let mut records: Vec<RunRecord> = chunks.into_iter().flatten().collect();
    sort_records(&mut records);
    Ok(records)
}

fn expect_experiment(cfg: &ExperimentConfig, want: Experiment) -> Result<()> {
    if cfg.experiment != want {
        return Err(WorkbenchError::Config(format!(
            "expected a {} configuration, got {}",
            want.id(),
            cfg.experiment.id()
        )));
    }
    Ok(())
}

pub fn run_fig3(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    expect_experiment(cfg, Experiment::Fig3Compare)?;
    run_trials(cfg)
}

pub fn run_fig4(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    expect_experiment(cfg, Experiment::Fig4Samples)?;
    run_trials(cfg)
}

pub fn run_fig5(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    expect_experiment(cfg, Experiment::Fig5Scaling)?;
    run_trials(cfg)
}

pub const HISTOGRAM_BINS: usize = 20;
pub const IDENTITY_SAMPLES: usize = 100;
pub const ZERO_BARCODE_SAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub mean: f64,
    pub std: f64,
    /// Counts over equal-width bins of `[0, 1]`.
    pub histogram: Vec<usize>,
}

impl ClassStats {
    fn of(values: &[f64]) -> Self {
        let (mean, std) = mean_std(values);
        let mut histogram = vec![0; HISTOGRAM_BINS];
        for &v in values {
            histogram[((v * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)] += 1;
        }
        Self { mean, std, histogram }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSize {
    pub n: usize,
    pub samples_per_class: usize,
    pub correlated: ClassStats,
    pub uncorrelated: ClassStats,
    /// `(mean_A − mean_B) / sqrt(se_A² + se_B²)`.
    pub separation_z: f64,
    /// Chosen on one sample set, scored on an independent one.
    pub threshold: f64,
    pub threshold_accuracy: f64,
    /// Max `|⟨SWAP·H⟩ − F|` over encoded pairs, evaluated on full statevectors.
    pub identity_residual_max: f64,
    /// Max `|F(0…0, x) − 1/N|` over random `x`.
    pub zero_barcode_residual_max: f64,
    /// Mean QNN_M test accuracy over the configured trials.
    pub qnn_m_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub master_seed: u64,
    pub epsilon: f64,
    pub sizes: Vec<OracleSize>,
}

fn forrelations(samples: &[SamplePair]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for s in samples {
        let f = forrelation(&s.x1, &s.x2)?.value();
        if s.label.as_f64() == 0.0 {
            a.push(f)
        } else {
            b.push(f)
        }
    }
    Ok((a, b))
}

/// Threshold between sorted scores maximizing accuracy of "F above → correlated".
fn best_threshold(corr: &[f64], unc: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = corr.iter().map(|&f| (f, true)).chain(unc.iter().map(|&f| (f, false))).collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut best = (corr.len(), f64::NEG_INFINITY);
    // everything above the cut is called correlated
    let mut correct = corr.len();
    for i in 0..all.len() {
        if all[i].1 {
            correct -= 1
        } else {
            correct += 1
        }
        if i + 1 < all.len() && all[i + 1].0 == all[i].0 {
            continue;
        }
        if correct > best.0 {
            let next = all.get(i + 1).map_or(all[i].0 + 1.0, |p| p.0);
            best = (correct, 0.5 * (all[i].0 + next));
        }
    }
    best.1
}

fn threshold_accuracy(corr: &[f64], unc: &[f64], t: f64) -> f64 {
    let right = corr.iter().filter(|&&f| f > t).count() + unc.iter().filter(|&&f| f <= t).count();
    right as f64 / (corr.len() + unc.len()) as f64
}

fn oracle_size(cfg: &ExperimentConfig, n: usize) -> Result<OracleSize> {
    let exp = cfg.experiment.id();
    let s = sampler(cfg, n)?;
    let k = cfg.oracle_samples;
    let fit = generate_with(&s, k, derive(cfg.master_seed, &[tag(exp), n as u64, 1]), &[])?;
    let held = generate_with(&s, k, derive(cfg.master_seed, &[tag(exp), n as u64, 2]), &[])?;
    let (corr, unc) = forrelations(&held.samples)?;
    let (fc, fu) = forrelations(&fit.samples)?;
    let threshold = best_threshold(&fc, &fu);
    let (ca, cb) = (ClassStats::of(&corr), ClassStats::of(&unc));
    let se = (ca.std.powi(2) / corr.len() as f64 + cb.std.powi(2) / unc.len() as f64).sqrt();

    let swap_h = PoolOp::SwapHAll.instantiate(n);
    let mut identity_residual_max: f64 = 0.0;
    for pair in held.samples.iter().step_by((held.samples.len() / IDENTITY_SAMPLES).max(1)).take(IDENTITY_SAMPLES) {
        let state = RegisterState::encode(&pair.x1, &pair.x2)?;
        let dense = expectation(&state, &swap_h)?;
        identity_residual_max = identity_residual_max.max((dense - forrelation(&pair.x1, &pair.x2)?.value()).abs());
    }

    let mut rng = gqml_core::seeded_rng(derive(cfg.master_seed, &[tag(exp), n as u64, 3]));
    let zero = Barcode::new(vec![0; 1 << n])?;
    let mut zero_barcode_residual_max: f64 = 0.0;
    for _ in 0..ZERO_BARCODE_SAMPLES {
        let x = Barcode::new((0..1usize << n).map(|_| rng.random_range(0..2u8)).collect())?;
        let f = forrelation(&zero, &x)?.value();
        zero_barcode_residual_max = zero_barcode_residual_max.max((f - 1.0 / (1u64 << n) as f64).abs());
    }

    let mut accs = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let per_class = cfg.per_class_train[0];
        let data = trial_data(cfg, trial, n, per_class)?;
        let seed = model_seed(cfg.master_seed, exp, trial, n, per_class, ModelKind::QnnM.id());
        accs.push(fit_model(cfg, ModelKind::QnnM, &data, seed)?.test_acc);
    }

    Ok(OracleSize {
        n,
        samples_per_class: k,
        separation_z: (ca.mean - cb.mean) / se,
        correlated: ca,
        uncorrelated: cb,
        threshold,
        threshold_accuracy: threshold_accuracy(&corr, &unc, threshold),
        identity_residual_max,
        zero_barcode_residual_max,
        qnn_m_accuracy: mean_std(&accs).0,
    })
}

pub fn run_oracle_check(cfg: &ExperimentConfig) -> Result<OracleReport> {
    expect_experiment(cfg, Experiment::OracleCheck)?;
    cfg.validate()?;
    let sizes = in_pool(cfg.threads, || cfg.n.par_iter().map(|&n| oracle_size(cfg, n)).collect::<Result<Vec<_>>>())??;
    Ok(OracleReport { master_seed: cfg.master_seed, epsilon: cfg.epsilon, sizes })
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutput {
    Records(Vec<RunRecord>),
    Oracle(OracleReport),
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    Ok(match cfg.experiment {
        Experiment::Fig3Compare => RunOutput::Records(run_fig3(cfg)?),
        Experiment::Fig4Samples => RunOutput::Records(run_fig4(cfg)?),
        Experiment::Fig5Scaling => RunOutput::Records(run_fig5(cfg)?),
        Experiment::OracleCheck => RunOutput::Oracle(run_oracle_check(cfg)?),
    })
}
