//! Run records, their CSV form, and mean ± std summaries.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WorkbenchError};

pub const CSV_HEADER: &str = "trial,model,n,M,epoch,train_loss,train_acc,test_acc,seed,wall_ms";

/// One row per (trial, model, size, epoch). `test_acc` is filled on the
/// final row of a run only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub trial: usize,
    pub model: String,
    pub n: usize,
    /// Training pairs, both classes together.
    #[serde(rename = "M")]
    pub m: usize,
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
    pub seed: u64,
    pub wall_ms: u64,
}

impl RunRecord {
    fn key(&self) -> (usize, &str, usize, usize, usize) {
        (self.trial, &self.model, self.n, self.m, self.epoch)
    }
}

/// Sorts by (trial, model, n, M, epoch).
pub fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(|a, b| a.key().cmp(&b.key()));
}

pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    if records.is_empty() {
        return Err(WorkbenchError::Format("no records to write".into()));
    }
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let mut w = csv::Writer::from_writer(out);
    for r in &sorted {
        w.serialize(r).map_err(|e| WorkbenchError::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| WorkbenchError::Format(e.to_string()))
}

pub fn emit_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| WorkbenchError::io(path, e))?;
    write_csv(records, std::io::BufWriter::new(file)).map_err(|e| match e {
        WorkbenchError::Format(m) => WorkbenchError::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_csv<R: Read>(input: R, path: &Path) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(|e| WorkbenchError::Csv { path: path.into(), source: e })?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(WorkbenchError::Format(format!("{}: unexpected header, want `{CSV_HEADER}`", path.display())));
    }
    rdr.deserialize().map(|r| r.map_err(|e| WorkbenchError::Csv { path: path.into(), source: e })).collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let file = std::fs::File::open(path).map_err(|e| WorkbenchError::io(path, e))?;
    parse_csv(file, path)
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub model: String,
    pub n: usize,
    pub m: usize,
    pub runs: usize,
    pub test_acc: (f64, f64),
    pub train_acc: (f64, f64),
    pub final_loss: (f64, f64),
    /// Mean loss on each run's first row.
    pub initial_loss: f64,
    /// Mean last epoch index, i.e. epochs or sweeps used.
    pub epochs: f64,
}

/// Aggregates final rows (those with a test accuracy) over trials.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut first: BTreeMap<(usize, &str, usize, usize), &RunRecord> = BTreeMap::new();
    for r in records {
        let k = (r.trial, r.model.as_str(), r.n, r.m);
        let e = first.entry(k).or_insert(r);
        if r.epoch < e.epoch {
            *e = r;
        }
    }
    let mut groups: BTreeMap<(&str, usize, usize), Vec<(&RunRecord, &RunRecord)>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.test_acc.is_some()) {
        let start = first[&(r.trial, r.model.as_str(), r.n, r.m)];
        groups.entry((r.model.as_str(), r.n, r.m)).or_default().push((start, r));
    }
    groups
        .into_iter()
        .map(|((model, n, m), runs)| {
            let col = |f: &dyn Fn(&RunRecord) -> f64| mean_std(&runs.iter().map(|(_, r)| f(r)).collect::<Vec<_>>());
            SummaryRow {
                model: model.into(),
                n,
                m,
                runs: runs.len(),
                test_acc: col(&|r| r.test_acc.unwrap_or(f64::NAN)),
                train_acc: col(&|r| r.train_acc),
                final_loss: col(&|r| r.train_loss),
                initial_loss: mean_std(&runs.iter().map(|(s, _)| s.train_loss).collect::<Vec<_>>()).0,
                epochs: mean_std(&runs.iter().map(|(_, r)| r.epoch as f64).collect::<Vec<_>>()).0,
            }
        })
        .collect()
}

pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<6} {:>3} {:>4} {:>5} {:>17} {:>17} {:>19} {:>8}\n",
        "model", "n", "M", "runs", "test_acc", "train_acc", "train_loss", "epochs"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<6} {:>3} {:>4} {:>5} {:>8.4} ± {:<6.4} {:>8.4} ± {:<6.4} {:>9.3e} ± {:<7.1e} {:>8.1}\n",
            r.model,
            r.n,
            r.m,
            r.runs,
            r.test_acc.0,
            r.test_acc.1,
            r.train_acc.0,
            r.train_acc.1,
            r.final_loss.0,
            r.final_loss.1,
            r.epochs
        ));
    }
    out
}
