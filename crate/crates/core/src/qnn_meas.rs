//! Measurement-adaptive model: expectation values of the equivariant pool on
//! each encoded pair, combined by a sparse linear model fit with cyclic
//! coordinate descent on
//!
//! `(1/2M) Σ_m (α·φ_m + c − y_m)² + λ‖α‖₁`
//!
//! over standardized features `φ_m`, with the intercept `c` unpenalized.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::SamplePair;
use crate::record::{threshold_accuracy, EpochStats};
use crate::statevec::{phase_state, product_expectation};
use crate::symmetry::{OperatorPool, PoolOp};
use crate::{Error, Result};

/// Columns with variance below this are treated as constant.
pub const CONSTANT_VARIANCE: f64 = 1e-12;

/// `M × K` matrix of pool expectation values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    ops: Vec<PoolOp>,
}

impl FeatureMatrix {
    pub fn from_rows(ops: Vec<PoolOp>, rows: &[Vec<f64>]) -> Result<Self> {
        let cols = ops.len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::SizeMismatch { expected: cols, found: r.len() });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "feature" });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data, ops })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn ops(&self) -> &[PoolOp] {
        &self.ops
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.data[m * self.cols..(m + 1) * self.cols]
    }

    pub fn get(&self, m: usize, k: usize) -> f64 {
        self.data[m * self.cols + k]
    }

    pub fn column(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |m| self.get(m, k))
    }
}

/// Pool expectations on `product_state(φ_{x1}, φ_{x2})`.
pub fn feature_row(pair: &SamplePair, pool: &OperatorPool) -> Result<Vec<f64>> {
    if pair.qubits() != pool.n() {
        return Err(Error::SizeMismatch { expected: 1 << pool.n(), found: pair.x1.len() });
    }
    let (p1, p2) = (phase_state(&pair.x1), phase_state(&pair.x2));
    pool.observables()?.iter().map(|o| product_expectation(&p1, &p2, o)).collect()
}

pub fn extract_features(samples: &[SamplePair], pool: &OperatorPool) -> Result<FeatureMatrix> {
    let rows = samples.iter().map(|s| feature_row(s, pool)).collect::<Result<Vec<_>>>()?;
    FeatureMatrix::from_rows(pool.ops(), &rows)
}

/// `sign(ρ) · max(|ρ| − λ, 0)`.
pub fn soft_threshold(rho: f64, lam: f64) -> f64 {
    if rho > lam {
        rho - lam
    } else if rho < -lam {
        rho + lam
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoConfig {
    pub lambda: f64,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self { lambda: 1e-3, max_sweeps: 1000, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepStats {
    /// Penalized objective after the sweep.
    pub objective: f64,
    /// `(1/M) Σ (score − y)²` after the sweep.
    pub mse: f64,
    pub max_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoModel {
    pub alpha: Vec<f64>,
    pub lambda: f64,
    pub intercept: f64,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
    pub ops: Vec<PoolOp>,
    /// False when `max_sweeps` ran out before the tolerance was met.
    pub converged: bool,
    pub trace: Vec<SweepStats>,
}

impl LassoModel {
    pub fn sweeps(&self) -> usize {
        self.trace.len()
    }

    pub fn standardize(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.feature_means).zip(&self.feature_scales).map(|((x, m), s)| (x - m) / s).collect()
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        self.standardize(row).iter().zip(&self.alpha).map(|(x, a)| x * a).sum::<f64>() + self.intercept
    }

    /// Class 1 when the score exceeds 0.5.
    pub fn predict(&self, row: &[f64]) -> (u8, f64) {
        let s = self.score(row);
        (u8::from(s > 0.5), s)
    }

    /// Coefficients and intercept acting on raw (unstandardized) features.
    pub fn raw_coefficients(&self) -> (Vec<f64>, f64) {
        let beta: Vec<f64> = self.alpha.iter().zip(&self.feature_scales).map(|(a, s)| a / s).collect();
        let shift: f64 = beta.iter().zip(&self.feature_means).map(|(b, m)| b * m).sum();
        (beta, self.intercept - shift)
    }

    pub fn nonzero(&self) -> usize {
        self.alpha.iter().filter(|a| **a != 0.0).count()
    }

    pub fn weight(&self, op: PoolOp) -> Option<f64> {
        self.ops.iter().position(|o| *o == op).map(|k| self.alpha[k])
    }
}

struct Standardized {
    cols: Vec<Vec<f64>>,
    means: Vec<f64>,
    scales: Vec<f64>,
}

fn standardize(f: &FeatureMatrix) -> Standardized {
    let m = f.rows() as f64;
    let mut cols = Vec::with_capacity(f.cols());
    let mut means = Vec::with_capacity(f.cols());
    let mut scales = Vec::with_capacity(f.cols());
    for k in 0..f.cols() {
        let mean = f.column(k).sum::<f64>() / m;
        let var = f.column(k).map(|x| (x - mean) * (x - mean)).sum::<f64>() / m;
        let scale = if var < CONSTANT_VARIANCE { 1.0 } else { libm::sqrt(var) };
        cols.push(f.column(k).map(|x| (x - mean) / scale).collect());
        means.push(mean);
        scales.push(scale);
    }
    Standardized { cols, means, scales }
}

fn check_labels(f: &FeatureMatrix, labels: &[f64]) -> Result<()> {
    if labels.len() != f.rows() {
        return Err(Error::SizeMismatch { expected: f.rows(), found: labels.len() });
    }
    if f.rows() < 2 {
        return Err(Error::InvalidParameter("LASSO needs at least two samples"));
    }
    let has = |v: f64| labels.contains(&v);
    if !has(0.0) || !has(1.0) || labels.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::InvalidParameter("labels must be 0/1 with both classes present"));
    }
    Ok(())
}

/// Smallest `λ` at which every standardized coefficient is zero:
/// `max_k |⟨f_k, y − ȳ⟩| / M`.
pub fn lambda_max(f: &FeatureMatrix, labels: &[f64]) -> Result<f64> {
    check_labels(f, labels)?;
    let st = standardize(f);
    let m = labels.len() as f64;
    let y_bar = labels.iter().sum::<f64>() / m;
    Ok(st
        .cols
        .iter()
        .map(|c| (c.iter().zip(labels).map(|(x, y)| x * (y - y_bar)).sum::<f64>() / m).abs())
        .fold(0.0, f64::max))
}

pub fn lasso_fit(f: &FeatureMatrix, labels: &[f64], cfg: &LassoConfig) -> Result<LassoModel> {
    check_labels(f, labels)?;
    if !(cfg.lambda >= 0.0) {
        return Err(Error::OutOfRange { what: "lambda", value: cfg.lambda });
    }
    let st = standardize(f);
    let m = labels.len() as f64;
    let k = f.cols();
    let intercept = labels.iter().sum::<f64>() / m;
    let col_sq: Vec<f64> = st.cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>() / m).collect();

    let mut alpha = vec![0.0; k];
    let mut resid: Vec<f64> = labels.iter().map(|y| y - intercept).collect();
    let mut trace = Vec::new();
    let mut converged = false;

    for _ in 0..cfg.max_sweeps {
        let mut max_change = 0.0f64;
        for j in 0..k {
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = &st.cols[j];
            let rho = col.iter().zip(&resid).map(|(x, r)| x * r).sum::<f64>() / m + col_sq[j] * alpha[j];
            let updated = soft_threshold(rho, cfg.lambda) / col_sq[j];
            let delta = updated - alpha[j];
            if delta != 0.0 {
                for (r, x) in resid.iter_mut().zip(col) {
                    *r -= delta * x;
                }
                alpha[j] = updated;
            }
            max_change = max_change.max(delta.abs());
        }
        let sq: f64 = resid.iter().map(|r| r * r).sum();
        let l1: f64 = alpha.iter().map(|a| a.abs()).sum();
        trace.push(SweepStats { objective: sq / (2.0 * m) + cfg.lambda * l1, mse: sq / m, max_change });
        if max_change < cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(LassoModel {
        alpha,
        lambda: cfg.lambda,
        intercept,
        feature_means: st.means,
        feature_scales: st.scales,
        ops: f.ops().to_vec(),
        converged,
        trace,
    })
}

/// Fitted pool plus LASSO weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    pub pool: OperatorPool,
    pub lasso: LassoModel,
}

impl MeasurementModel {
    pub fn fit(train: &[SamplePair], pool: &OperatorPool, cfg: &LassoConfig) -> Result<Self> {
        let f = extract_features(train, pool)?;
        let labels: Vec<f64> = train.iter().map(|s| s.label.as_f64()).collect();
        let lasso = lasso_fit(&f, &labels, cfg)?;
        Ok(Self { pool: pool.clone(), lasso })
    }

    pub fn score(&self, pair: &SamplePair) -> Result<f64> {
        Ok(self.lasso.score(&feature_row(pair, &self.pool)?))
    }

    pub fn predict(&self, pair: &SamplePair) -> Result<(u8, f64)> {
        Ok(self.lasso.predict(&feature_row(pair, &self.pool)?))
    }

    pub fn accuracy(&self, samples: &[SamplePair]) -> Result<f64> {
        let scores = samples.iter().map(|s| self.score(s)).collect::<Result<Vec<_>>>()?;
        let labels: Vec<f64> = samples.iter().map(|s| s.label.as_f64()).collect();
        Ok(threshold_accuracy(&scores, &labels))
    }

    /// Training MSE per coordinate sweep. Accuracy is only known for the
    /// final weights and is repeated on every row.
    pub fn epoch_stats(&self, train: &[SamplePair]) -> Result<Vec<EpochStats>> {
        let acc = self.accuracy(train)?;
        Ok(self
            .lasso
            .trace
            .iter()
            .enumerate()
            .map(|(i, s)| EpochStats { epoch: i + 1, train_loss: s.mse, train_acc: acc })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use rand::Rng;

    fn random_problem(m: usize, k: usize, seed: u64) -> (FeatureMatrix, Vec<f64>) {
        let mut rng = seeded_rng(seed);
        let ops = PoolOp::ALL[..k].to_vec();
        let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let labels = (0..m).map(|i| (i % 2) as f64).collect();
        (FeatureMatrix::from_rows(ops, &rows).unwrap(), labels)
    }

    #[test]
    fn soft_threshold_examples() {
        assert!((soft_threshold(0.5, 0.2) - 0.3).abs() < 1e-15);
        assert!((soft_threshold(-0.5, 0.2) + 0.3).abs() < 1e-15);
        assert_eq!(soft_threshold(0.1, 0.2), 0.0);
        assert_eq!(soft_threshold(-0.2, 0.2), 0.0);
    }

    #[test]
    fn unpenalized_single_feature_is_least_squares() {
        let (f, y) = random_problem(20, 1, 4);
        let model = lasso_fit(&f, &y, &LassoConfig { lambda: 0.0, ..Default::default() }).unwrap();
        let x: Vec<f64> = f.column(0).collect();
        let (mx, my) = (x.iter().sum::<f64>() / 20.0, y.iter().sum::<f64>() / 20.0);
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        let slope_std = sxy / sxx * (sxx / 20.0).sqrt();
        assert!((model.alpha[0] - slope_std).abs() < 1e-8);
        assert!(model.converged);
    }

    #[test]
    fn null_model_above_lambda_max() {
        for seed in 0..10 {
            let (f, y) = random_problem(20, 10, seed);
            let lmax = lambda_max(&f, &y).unwrap();
            let at = lasso_fit(&f, &y, &LassoConfig { lambda: lmax, ..Default::default() }).unwrap();
            assert!(at.alpha.iter().all(|a| *a == 0.0));
            let below = lasso_fit(&f, &y, &LassoConfig { lambda: 0.9 * lmax, ..Default::default() }).unwrap();
            assert!(below.nonzero() > 0);
        }
    }

    #[test]
    fn objective_is_monotone() {
        let (f, y) = random_problem(20, 10, 12);
        let model = lasso_fit(&f, &y, &LassoConfig { lambda: 1e-3, max_sweeps: 200, tol: 1e-12 }).unwrap();
        for w in model.trace.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-12);
        }
    }

    #[test]
    fn sparsity_shrinks_with_lambda() {
        let (f, y) = random_problem(20, 10, 13);
        let counts: Vec<usize> = [1e-4, 1e-3, 1e-2, 1e-1]
            .iter()
            .map(|&l| lasso_fit(&f, &y, &LassoConfig { lambda: l, ..Default::default() }).unwrap().nonzero())
            .collect();
        assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
    }

    #[test]
    fn raw_coefficients_reproduce_scores() {
        let (f, y) = random_problem(20, 6, 14);
        let model = lasso_fit(&f, &y, &LassoConfig { lambda: 1e-2, ..Default::default() }).unwrap();
        let (beta, b0) = model.raw_coefficients();
        for m in 0..f.rows() {
            let raw: f64 = f.row(m).iter().zip(&beta).map(|(x, b)| x * b).sum::<f64>() + b0;
            assert!((raw - model.score(f.row(m))).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_column_gets_zero_weight() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![0.0, i as f64 * 0.1]).collect();
        let f = FeatureMatrix::from_rows(PoolOp::ALL[..2].to_vec(), &rows).unwrap();
        let y: Vec<f64> = (0..8).map(|i| f64::from(i >= 4)).collect();
        let model = lasso_fit(&f, &y, &LassoConfig::default()).unwrap();
        assert_eq!(model.feature_scales[0], 1.0);
        assert_eq!(model.alpha[0], 0.0);
        assert!(model.alpha[1] > 0.0);
    }

    #[test]
    fn predict_threshold() {
        let model = LassoModel {
            alpha: vec![1.0],
            lambda: 0.0,
            intercept: 0.0,
            feature_means: vec![0.0],
            feature_scales: vec![1.0],
            ops: vec![PoolOp::SumY],
            converged: true,
            trace: Vec::new(),
        };
        assert_eq!(model.predict(&[0.9]).0, 1);
        assert_eq!(model.predict(&[0.1]).0, 0);
    }

    #[test]
    fn bad_inputs() {
        let (f, _) = random_problem(4, 2, 1);
        assert!(lasso_fit(&f, &[0.0; 4], &LassoConfig::default()).is_err());
        assert!(lasso_fit(&f, &[0.0, 1.0], &LassoConfig::default()).is_err());
        assert!(lasso_fit(&f, &[0.0, 1.0, 0.0, 1.0], &LassoConfig { lambda: -1.0, ..Default::default() }).is_err());
    }
}
