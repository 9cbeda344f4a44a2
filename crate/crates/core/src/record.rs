//! Per-epoch training statistics shared by every model.

/// Metrics after `epoch` optimizer updates (or coordinate sweeps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
}

/// Fraction of `scores` on the right side of the 0.5 threshold.
pub fn threshold_accuracy(scores: &[f64], labels: &[f64]) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    let hits = scores.iter().zip(labels).filter(|(s, y)| (if **s > 0.5 { 1.0 } else { 0.0 }) == **y).count();
    hits as f64 / scores.len() as f64
}
