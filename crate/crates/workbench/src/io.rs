//! File formats: datasets and fitted quantum models as JSON, Siamese
//! weights as a binary tensor file with a JSON shape manifest.

use std::fs;
use std::io::Write;
use std::path::Path;

use gqml_core::classical::{CnnSpec, EncoderSpec, Head, Layer, MlpSpec, Padding, SiameseModel};
use gqml_core::dataset::{Barcode, Dataset, Label, SamplePair};
use gqml_core::qnn_meas::LassoModel;
use gqml_core::qnn_var::{AnsatzParams, AnsatzSpec, VariationalModel};
use gqml_core::symmetry::PoolOp;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WorkbenchError};

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| WorkbenchError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| WorkbenchError::io(path, e))
}

fn json_error(path: &Path, e: &serde_json::Error) -> WorkbenchError {
    WorkbenchError::Json { path: path.into(), line: e.line(), column: e.column(), message: e.to_string() }
}

/// Reads a file and parses it, attaching the path and position to errors.
pub fn read_json<T>(path: &Path, parse: impl FnOnce(&str) -> Result<T, serde_json::Error>) -> Result<T> {
    let text = read_text(path)?;
    parse(&text).map_err(|e| json_error(path, &e))
}

/// Parses with the failing field's path (`samples[3].x1`) in the error.
fn parse_tracked<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            return json_error(path, &inner);
        }
        WorkbenchError::Field { path: path.into(), line: inner.line(), field, message: inner.to_string() }
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSample {
    x1: String,
    x2: String,
    y: u8,
}

#[derive(Debug, Deserialize)]
#[serde(try_from = "RawSample")]
struct SampleRecord(SamplePair);

impl TryFrom<RawSample> for SampleRecord {
    type Error = String;

    fn try_from(raw: RawSample) -> std::result::Result<Self, String> {
        let x1 = Barcode::from_bitstring(&raw.x1).map_err(|e| format!("x1: {e}"))?;
        let x2 = Barcode::from_bitstring(&raw.x2).map_err(|e| format!("x2: {e}"))?;
        let label = Label::from_value(raw.y).ok_or_else(|| format!("y: expected 0 or 1, got {}", raw.y))?;
        SamplePair::new(x1, x2, label).map(SampleRecord).map_err(|e| format!("x2: {e}"))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    n: usize,
    epsilon: f64,
    seed: u64,
    samples: Vec<SampleRecord>,
}

/// Line of the `k`-th sample's opening brace inside the `samples` array.
fn sample_line(text: &str, k: usize) -> usize {
    let start = text.find("\"samples\"").unwrap_or(0);
    let mut depth = 0usize;
    let mut seen = 0usize;
    for (i, ch) in text[start..].char_indices() {
        match ch {
            '{' => {
                depth += 1;
                if depth == 1 {
                    if seen == k {
                        return text[..start + i].matches('\n').count() + 1;
                    }
                    seen += 1;
                }
            }
            '}' => depth = depth.saturating_sub(1),
            _ => {}
        }
    }
    0
}

pub fn parse_dataset(path: &Path, text: &str) -> Result<Dataset> {
    let file: DatasetFile = parse_tracked(path, text)?;
    let field_error =
        |field: String, line: usize, message: String| WorkbenchError::Field { path: path.into(), line, field, message };
    if !(file.epsilon > 0.0 && file.epsilon.is_finite()) {
        return Err(field_error("epsilon".into(), 0, "must be positive and finite".into()));
    }
    for (k, s) in file.samples.iter().enumerate() {
        if s.0.qubits() != file.n {
            return Err(field_error(
                format!("samples[{k}].x1"),
                sample_line(text, k),
                format!("{} pixels, expected 2^{} = {}", s.0.x1.len(), file.n, 1usize << file.n),
            ));
        }
    }
    let ds = Dataset {
        n: file.n,
        epsilon: file.epsilon,
        seed: file.seed,
        samples: file.samples.into_iter().map(|s| s.0).collect(),
    };
    ds.validate()?;
    Ok(ds)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    parse_dataset(path, &read_text(path)?)
}

/// One sample per line.
pub fn dataset_to_json(ds: &Dataset) -> String {
    let mut out =
        format!("{{\n  \"n\": {},\n  \"epsilon\": {},\n  \"seed\": {},\n  \"samples\": [", ds.n, ds.epsilon, ds.seed);
    for (k, s) in ds.samples.iter().enumerate() {
        let raw = RawSample { x1: s.x1.to_bitstring(), x2: s.x2.to_bitstring(), y: s.label.value() };
        out.push_str(if k == 0 { "\n    " } else { ",\n    " });
        out.push_str(&serde_json::to_string(&raw).expect("sample serializes"));
    }
    out.push_str(if ds.samples.is_empty() { "]\n}\n" } else { "\n  ]\n}\n" });
    out
}

pub fn write_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    write_text(path, &dataset_to_json(ds))
}

fn op_names(ops: &[PoolOp]) -> Vec<String> {
    ops.iter().map(|o| o.name().to_string()).collect()
}

fn parse_ops(names: &[String]) -> Result<Vec<PoolOp>> {
    Ok(names.iter().map(|s| PoolOp::from_name(s)).collect::<gqml_core::Result<Vec<_>>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LassoFile {
    pub n: usize,
    pub lambda: f64,
    pub intercept: f64,
    pub ops: Vec<String>,
    pub alpha: Vec<f64>,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
    pub converged: bool,
    pub sweeps: usize,
}

impl LassoFile {
    pub fn from_model(n: usize, m: &LassoModel) -> Self {
        Self {
            n,
            lambda: m.lambda,
            intercept: m.intercept,
            ops: op_names(&m.ops),
            alpha: m.alpha.clone(),
            feature_means: m.feature_means.clone(),
            feature_scales: m.feature_scales.clone(),
            converged: m.converged,
            sweeps: m.sweeps(),
        }
    }

    /// The per-sweep trace is not stored.
    pub fn to_model(&self) -> Result<LassoModel> {
        let k = self.ops.len();
        if self.alpha.len() != k || self.feature_means.len() != k || self.feature_scales.len() != k {
            return Err(WorkbenchError::Format("LASSO file: coefficient vectors must match the operator list".into()));
        }
        Ok(LassoModel {
            alpha: self.alpha.clone(),
            lambda: self.lambda,
            intercept: self.intercept,
            feature_means: self.feature_means.clone(),
            feature_scales: self.feature_scales.clone(),
            ops: parse_ops(&self.ops)?,
            converged: self.converged,
            trace: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzFile {
    pub n: usize,
    pub layers: usize,
    pub generators: Vec<String>,
    pub observable: String,
    pub theta: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl AnsatzFile {
    pub fn from_model(m: &VariationalModel) -> Self {
        let spec = m.ansatz.spec();
        Self {
            n: m.ansatz.n(),
            layers: spec.layers,
            generators: op_names(&spec.generators),
            observable: m.observable_op.name().into(),
            theta: m.params.theta.clone(),
            a: m.params.a,
            b: m.params.b,
        }
    }

    pub fn to_model(&self) -> Result<VariationalModel> {
        let spec = AnsatzSpec { layers: self.layers, generators: parse_ops(&self.generators)? };
        let params = AnsatzParams { theta: self.theta.clone(), a: self.a, b: self.b };
        Ok(VariationalModel::new(&spec, self.n, PoolOp::from_name(&self.observable)?, params)?)
    }
}

pub fn write_model_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| WorkbenchError::Format(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

pub fn read_model_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    parse_tracked(path, &read_text(path)?)
}

pub const TENSOR_MAGIC: &[u8; 8] = b"GQMLTNS1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Element offset into the data section.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorHeader {
    pub architecture: String,
    pub n: usize,
    pub head: String,
    pub mlp_widths: Option<Vec<usize>>,
    pub cnn_channels: Option<[usize; 2]>,
    pub cnn_embedding: Option<usize>,
    pub cnn_padding: Option<String>,
    pub dtype: String,
    pub tensors: Vec<TensorEntry>,
}

fn tensor_entries(model: &SiameseModel) -> Vec<TensorEntry> {
    let mut out = Vec::new();
    for (i, layer) in model.network().layers().iter().enumerate() {
        let (offset, weight_shape, bias) = match *layer {
            Layer::Dense { input, output, offset, .. } => (offset, vec![input, output], output),
            Layer::Conv { c_in, c_out, offset, .. } => (offset, vec![c_out, c_in, 3, 3], c_out),
            Layer::MaxPool { .. } => continue,
        };
        let weights: usize = weight_shape.iter().product();
        out.push(TensorEntry { name: format!("layer{i}.weight"), shape: weight_shape, offset });
        out.push(TensorEntry { name: format!("layer{i}.bias"), shape: vec![bias], offset: offset + weights });
    }
    let k = model.network().param_count();
    out.push(TensorEntry { name: "head.w".into(), shape: vec![1], offset: k });
    out.push(TensorEntry { name: "head.c".into(), shape: vec![1], offset: k + 1 });
    out
}

/// Layout: magic, header length as little-endian `u64`, JSON header,
/// then every parameter as little-endian `f64`.
pub fn siamese_to_bytes(model: &SiameseModel) -> Vec<u8> {
    let (mlp_widths, cnn) = match model.spec() {
        EncoderSpec::Mlp(s) => (Some(s.widths.clone()), None),
        EncoderSpec::Cnn(s) => (None, Some(*s)),
    };
    let header = TensorHeader {
        architecture: model.spec().name().into(),
        n: model.n(),
        head: match model.head() {
            Head::Logistic => "logistic".into(),
            Head::ExpDecay => "exp_decay".into(),
        },
        mlp_widths,
        cnn_channels: cnn.map(|c| c.channels),
        cnn_embedding: cnn.map(|c| c.embedding),
        cnn_padding: cnn.and_then(|c| c.padding).map(|p| match p {
            Padding::Valid => "valid".into(),
            Padding::Same => "same".into(),
        }),
        dtype: "f64le".into(),
        tensors: tensor_entries(model),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(16 + json.len() + 8 * model.params().len());
    out.extend_from_slice(TENSOR_MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for p in model.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn siamese_from_bytes(bytes: &[u8]) -> Result<SiameseModel> {
    let fail = |m: &str| WorkbenchError::Format(format!("tensor file: {m}"));
    if bytes.len() < 16 || &bytes[..8] != TENSOR_MAGIC {
        return Err(fail("bad magic"));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = bytes.get(16..16 + len).ok_or_else(|| fail("truncated header"))?;
    let header: TensorHeader = serde_json::from_slice(body).map_err(|e| fail(&e.to_string()))?;
    if header.dtype != "f64le" {
        return Err(fail("unsupported dtype"));
    }
    let spec = match header.architecture.as_str() {
        "dnn" => EncoderSpec::Mlp(MlpSpec { widths: header.mlp_widths.clone().ok_or_else(|| fail("missing widths"))? }),
        "cnn" => EncoderSpec::Cnn(CnnSpec {
            channels: header.cnn_channels.ok_or_else(|| fail("missing channels"))?,
            embedding: header.cnn_embedding.ok_or_else(|| fail("missing embedding"))?,
            padding: match header.cnn_padding.as_deref() {
                None => None,
                Some("valid") => Some(Padding::Valid),
                Some("same") => Some(Padding::Same),
                Some(_) => return Err(fail("unknown padding")),
            },
        }),
        _ => return Err(fail("unknown architecture")),
    };
    let head = match header.head.as_str() {
        "logistic" => Head::Logistic,
        "exp_decay" => Head::ExpDecay,
        _ => return Err(fail("unknown head")),
    };
    let data = &bytes[16 + len..];
    if !data.len().is_multiple_of(8) {
        return Err(fail("data section is not a whole number of f64 values"));
    }
    let params: Vec<f64> = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let model = SiameseModel::from_params(&spec, header.n, head, params)?;
    if tensor_entries(&model) != header.tensors {
        return Err(fail("tensor manifest does not match the architecture"));
    }
    Ok(model)
}

pub fn write_siamese(path: &Path, model: &SiameseModel) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| WorkbenchError::io(path, e))?;
    f.write_all(&siamese_to_bytes(model)).map_err(|e| WorkbenchError::io(path, e))
}

pub fn read_siamese(path: &Path) -> Result<SiameseModel> {
    siamese_from_bytes(&fs::read(path).map_err(|e| WorkbenchError::io(path, e))?)
}
