//! Confusion counts, classification and cost-sensitive metrics, trivial baselines.

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::rng_from;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("validation error: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, tn: usize, fp: usize, fn_: usize) -> Self {
        ConfusionMatrix { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn correct(&self) -> usize {
        self.tp + self.tn
    }

    pub fn errors(&self) -> usize {
        self.fp + self.fn_
    }
}

/// Counts predictions against truth with 1 as the positive class.
pub fn confusion(preds: &[u8], truth: &[u8]) -> Result<ConfusionMatrix, MetricsError> {
    if preds.len() != truth.len() {
        return Err(MetricsError::Validation(format!(
            "{} predictions for {} labels",
            preds.len(),
            truth.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (i, (&p, &t)) in preds.iter().zip(truth).enumerate() {
        match (p, t) {
            (1, 1) => cm.tp += 1,
            (0, 0) => cm.tn += 1,
            (1, 0) => cm.fp += 1,
            (0, 1) => cm.fn_ += 1,
            _ => return Err(MetricsError::Validation(format!("non-binary label at position {i}"))),
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub w_fp: f64,
    pub w_fn: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights { w_fp: 0.2, w_fn: 0.8 }
    }
}

impl CostWeights {
    pub fn new(w_fp: f64, w_fn: f64) -> Result<Self, MetricsError> {
        let w = CostWeights { w_fp, w_fn };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        if !(self.w_fp >= 0.0 && self.w_fn >= 0.0) || !self.w_fp.is_finite() || !self.w_fn.is_finite() {
            return Err(MetricsError::Validation("cost weights must be finite and non-negative".into()));
        }
        if self.w_fp == 0.0 && self.w_fn == 0.0 {
            return Err(MetricsError::Validation("cost weights cannot both be zero".into()));
        }
        Ok(())
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

/// Precision, recall, F1 and accuracy; every 0/0 ratio is 0.
pub fn classification_metrics(cm: &ConfusionMatrix) -> ClassificationMetrics {
    let tp = cm.tp as f64;
    let precision = ratio(tp, (cm.tp + cm.fp) as f64);
    let recall = ratio(tp, (cm.tp + cm.fn_) as f64);
    ClassificationMetrics {
        precision,
        recall,
        f1: ratio(2.0 * precision * recall, precision + recall),
        accuracy: ratio(cm.correct() as f64, cm.total() as f64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostMetrics {
    pub fp_cost: f64,
    pub fn_cost: f64,
    pub cost_sensitive_accuracy: f64,
}

/// Weighted error costs and `correct / (correct + w_fp*fp + w_fn*fn)`.
pub fn cost_metrics(cm: &ConfusionMatrix, w: &CostWeights) -> CostMetrics {
    let fp_cost = w.w_fp * cm.fp as f64;
    let fn_cost = w.w_fn * cm.fn_ as f64;
    let correct = cm.correct() as f64;
    CostMetrics { fp_cost, fn_cost, cost_sensitive_accuracy: ratio(correct, correct + fp_cost + fn_cost) }
}

pub const METRIC_HEADERS: [&str; 7] = ["Pre.", "Rec", "F1", "Acc.", "FP Cost", "FN Cost", "Cost-Sens Acc."];

/// The seven reported metrics of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub fp_cost: f64,
    pub fn_cost: f64,
    pub cost_sensitive_accuracy: f64,
}

impl MetricsRow {
    pub fn from_confusion(cm: &ConfusionMatrix, w: &CostWeights) -> Self {
        let c = classification_metrics(cm);
        let k = cost_metrics(cm, w);
        MetricsRow {
            precision: c.precision,
            recall: c.recall,
            f1: c.f1,
            accuracy: c.accuracy,
            fp_cost: k.fp_cost,
            fn_cost: k.fn_cost,
            cost_sensitive_accuracy: k.cost_sensitive_accuracy,
        }
    }

    pub fn evaluate(preds: &[u8], truth: &[u8], w: &CostWeights) -> Result<Self, MetricsError> {
        Ok(Self::from_confusion(&confusion(preds, truth)?, w))
    }

    /// Values in report column order.
    pub fn values(&self) -> [f64; 7] {
        [
            self.precision,
            self.recall,
            self.f1,
            self.accuracy,
            self.fp_cost,
            self.fn_cost,
            self.cost_sensitive_accuracy,
        ]
    }

    pub fn from_values(v: [f64; 7]) -> Self {
        MetricsRow {
            precision: v[0],
            recall: v[1],
            f1: v[2],
            accuracy: v[3],
            fp_cost: v[4],
            fn_cost: v[5],
            cost_sensitive_accuracy: v[6],
        }
    }

    /// Column-wise arithmetic mean; `None` for an empty slice.
    pub fn mean(rows: &[MetricsRow]) -> Option<MetricsRow> {
        if rows.is_empty() {
            return None;
        }
        let mut acc = [0.0; 7];
        for r in rows {
            acc.iter_mut().zip(r.values()).for_each(|(a, v)| *a += v);
        }
        Some(Self::from_values(acc.map(|a| a / rows.len() as f64)))
    }
}

/// Mean and population standard deviation of repeated runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub mean: MetricsRow,
    pub std: MetricsRow,
    pub runs: usize,
}

pub fn summarize(rows: &[MetricsRow]) -> Option<MetricsSummary> {
    let mean = MetricsRow::mean(rows)?;
    let m = mean.values();
    let mut var = [0.0; 7];
    for r in rows {
        var.iter_mut().zip(r.values().iter().zip(m)).for_each(|(s, (v, mu))| *s += (v - mu) * (v - mu));
    }
    let std = MetricsRow::from_values(var.map(|s| (s / rows.len() as f64).sqrt()));
    Some(MetricsSummary { mean, std, runs: rows.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Maj1,
    Maj0,
    Random,
}

impl Baseline {
    pub const ALL: [Baseline; 3] = [Baseline::Maj1, Baseline::Maj0, Baseline::Random];

    pub fn label(self) -> &'static str {
        match self {
            Baseline::Maj1 => "Maj1",
            Baseline::Maj0 => "Maj0",
            Baseline::Random => "random",
        }
    }
}

/// Feature-blind predictions: all ones, all zeros, or a seeded fair coin.
pub fn baseline_predict(kind: Baseline, n: usize, seed: u64) -> Vec<u8> {
    match kind {
        Baseline::Maj1 => vec![1; n],
        Baseline::Maj0 => vec![0; n],
        Baseline::Random => {
            let mut rng = rng_from(seed, &[]);
            (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect()
        }
    }
}
