//! Experiment configuration, read from JSON. Fields left out of the file
//! take the preset of the chosen experiment.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use gqml_core::dataset::{Rounding, DEFAULT_EPSILON};
use serde::{Deserialize, Serialize};

use crate::error::{Result, WorkbenchError};
use crate::io::read_json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    #[serde(alias = "fig3")]
    Fig3Compare,
    #[serde(alias = "fig4")]
    Fig4Samples,
    #[serde(alias = "fig5")]
    Fig5Scaling,
    #[serde(alias = "oracle")]
    OracleCheck,
}

impl Experiment {
    pub fn id(self) -> &'static str {
        match self {
            Experiment::Fig3Compare => "fig3_compare",
            Experiment::Fig4Samples => "fig4_samples",
            Experiment::Fig5Scaling => "fig5_scaling",
            Experiment::OracleCheck => "oracle_check",
        }
    }
}

impl FromStr for Experiment {
    type Err = WorkbenchError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.into()))
            .map_err(|_| WorkbenchError::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    QnnM,
    QnnU,
    Dnn,
    Cnn,
}

impl ModelKind {
    pub fn id(self) -> &'static str {
        match self {
            ModelKind::QnnM => "qnn_m",
            ModelKind::QnnU => "qnn_u",
            ModelKind::Dnn => "dnn",
            ModelKind::Cnn => "cnn",
        }
    }

    pub fn is_classical(self) -> bool {
        matches!(self, ModelKind::Dnn | ModelKind::Cnn)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ModelKind {
    type Err = WorkbenchError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.into()))
            .map_err(|_| WorkbenchError::Config(format!("unknown model `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundingMode {
    Randomized,
    Sign,
}

impl From<RoundingMode> for Rounding {
    fn from(m: RoundingMode) -> Self {
        match m {
            RoundingMode::Randomized => Rounding::Randomized,
            RoundingMode::Sign => Rounding::Sign,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadMode {
    Logistic,
    ExpDecay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QnnUSettings {
    pub lr: f64,
    pub epochs: usize,
    pub layers: usize,
}

impl Default for QnnUSettings {
    fn default() -> Self {
        Self { lr: 0.1, epochs: 200, layers: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalSettings {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: Option<usize>,
    pub early_stop_loss: Option<f64>,
    pub head: HeadMode,
    /// Scale the head weight by the mean initial training distance.
    pub calibrate_head: bool,
    pub mlp_widths: Vec<usize>,
}

impl Default for ClassicalSettings {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            epochs: 300,
            batch_size: None,
            early_stop_loss: None,
            head: HeadMode::Logistic,
            calibrate_head: true,
            mlp_widths: vec![128, 64, 32],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Qubits per register; a list sweeps several sizes.
    pub n: Vec<usize>,
    /// Training pairs per class; a list sweeps several sizes.
    pub per_class_train: Vec<usize>,
    pub test_per_class: usize,
    pub trials: usize,
    pub models: Vec<ModelKind>,
    pub epsilon: f64,
    pub rounding: RoundingMode,
    pub lambda: f64,
    pub pool_size: usize,
    pub qnn_u: QnnUSettings,
    pub classical: ClassicalSettings,
    pub master_seed: u64,
    /// One CSV row per epoch instead of one per run.
    pub per_epoch_records: bool,
    /// Pairs per class for the forrelation statistics of the oracle check.
    pub oracle_samples: usize,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn preset(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            n: vec![2],
            per_class_train: vec![10],
            test_per_class: 40,
            trials: 10,
            models: vec![ModelKind::QnnU, ModelKind::QnnM],
            epsilon: DEFAULT_EPSILON,
            rounding: RoundingMode::Randomized,
            lambda: 1e-3,
            pool_size: 10,
            qnn_u: QnnUSettings::default(),
            classical: ClassicalSettings::default(),
            master_seed: 2024,
            per_epoch_records: false,
            oracle_samples: 200,
            threads: None,
        };
        match experiment {
            Experiment::Fig3Compare => Self { per_epoch_records: true, ..base },
            Experiment::Fig4Samples => Self {
                n: vec![10],
                per_class_train: (1..=10).collect(),
                trials: 50,
                models: vec![ModelKind::QnnM, ModelKind::Dnn, ModelKind::Cnn],
                ..base
            },
            Experiment::Fig5Scaling => Self {
                n: vec![2, 3, 4, 5],
                per_class_train: vec![5],
                trials: 50,
                models: vec![ModelKind::QnnM, ModelKind::Dnn, ModelKind::Cnn],
                ..base
            },
            Experiment::OracleCheck => {
                Self { n: vec![2, 3, 5, 10], per_class_train: vec![5], models: vec![ModelKind::QnnM], ..base }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(WorkbenchError::Config(m.into()));
        if self.n.is_empty() || self.n.iter().any(|&n| n == 0 || n > 12) {
            return bad("every n must lie in 1..=12");
        }
        if self.per_class_train.is_empty() || self.per_class_train.contains(&0) {
            return bad("per-class training counts must be positive");
        }
        if self.test_per_class == 0 || self.oracle_samples == 0 {
            return bad("test and oracle sample counts must be positive");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.models.is_empty() {
            return bad("at least one model is required");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive and finite");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be non-negative");
        }
        if !(1..=gqml_core::symmetry::PoolOp::ALL.len()).contains(&self.pool_size) {
            return bad("pool size out of range");
        }
        if self.qnn_u.layers == 0 || !(self.qnn_u.lr >= 0.0) || !(self.classical.lr >= 0.0) {
            return bad("learning rates must be non-negative and layers positive");
        }
        if self.classical.batch_size == Some(0)
            || self.classical.mlp_widths.contains(&0)
            || self.classical.mlp_widths.is_empty()
        {
            return bad("batch size and layer widths must be positive");
        }
        if self.threads == Some(0) {
            return bad("threads must be positive");
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> std::result::Result<Self, serde_json::Error> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let experiment: Experiment = serde_json::from_value(
            raw.get("experiment").cloned().ok_or_else(|| serde::de::Error::missing_field("experiment"))?,
        )?;
        let mut merged = serde_json::to_value(Self::preset(experiment)).expect("config serializes");
        if let (serde_json::Value::Object(base), serde_json::Value::Object(over)) = (&mut merged, raw) {
            for (k, v) in over {
                let v = match (k.as_str(), v) {
                    ("n" | "per_class_train", serde_json::Value::Number(x)) => serde_json::Value::Array(vec![x.into()]),
                    ("qnn_u" | "classical", serde_json::Value::Object(inner)) => {
                        let mut section = base.get(&k).cloned().unwrap_or_default();
                        if let serde_json::Value::Object(s) = &mut section {
                            s.extend(inner);
                        }
                        section
                    }
                    (_, v) => v,
                };
                base.insert(k, v);
            }
        }
        serde_json::from_value(merged)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = read_json(path, Self::from_json_str)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
