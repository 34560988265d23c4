//! Gradient-boosted regression trees on the logistic loss.
//!
//! Each round fits a squared-error tree to the residuals `y - p` on a
//! per-tree column sample and adds it with shrinkage. Leaves hold plain
//! residual means (no second-order weighting).

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::hyper::{positive_usize, Assignment, AssignmentExt};
use super::logistic::sigmoid;
use super::tree::{Criterion, Tree, TreeConfig};
use super::ModelError;
use crate::data::Dataset;
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMetric {
    Logloss,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub colsample_bytree: f64,
    /// Accepted for parity with the tuned parameter list; has no effect.
    pub use_label_encoder: bool,
    /// Metric reported on the training set after fitting.
    pub eval_metric: EvalMetric,
}

impl GbtParams {
    pub fn from_assignment(a: &Assignment) -> Result<Self, ModelError> {
        let colsample = a.float("colsample_bytree")?;
        if !(colsample > 0.0 && colsample <= 1.0) {
            return Err(ModelError::Hyper(format!("colsample_bytree {colsample} not in (0, 1]")));
        }
        let learning_rate = a.float("learning_rate")?;
        if learning_rate < 0.0 {
            return Err(ModelError::Hyper("learning_rate must be non-negative".into()));
        }
        let eval_metric = match a.text("eval_metric")? {
            "logloss" => EvalMetric::Logloss,
            "error" => EvalMetric::Error,
            other => return Err(ModelError::Hyper(format!("unknown eval_metric `{other}`"))),
        };
        Ok(GbtParams {
            n_estimators: positive_usize(a, "n_estimators")?,
            learning_rate,
            max_depth: positive_usize(a, "max_depth")?,
            colsample_bytree: colsample,
            use_label_encoder: a.flag("use_label_encoder")?,
            eval_metric,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbt {
    /// Initial log-odds.
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    pub eval_metric: EvalMetric,
    pub train_metric: f64,
}

impl Gbt {
    /// Returns the model and its summed raw impurity decreases per feature.
    pub fn fit(data: &Dataset, params: &GbtParams, seed: u64) -> (Gbt, Vec<f64>) {
        let n = data.len();
        let d = data.n_features();
        let prevalence = (data.positives() as f64 / n.max(1) as f64).clamp(1e-6, 1.0 - 1e-6);
        let base_score = (prevalence / (1.0 - prevalence)).ln();
        let y: Vec<f64> = data.labels.iter().map(|&l| f64::from(l)).collect();
        let w = vec![1.0; n];
        let cfg = TreeConfig {
            criterion: Criterion::SquaredError,
            max_depth: params.max_depth,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: None,
        };
        let n_cols = ((params.colsample_bytree * d as f64).round() as usize).clamp(1, d.max(1));
        let mut scores = vec![base_score; n];
        let mut importance = vec![0.0; d];
        let mut trees = Vec::with_capacity(params.n_estimators);
        for round in 0..params.n_estimators {
            let mut rng = rng_from(seed, &[round as u64]);
            let mut features: Vec<usize> = if n_cols < d { sample(&mut rng, d, n_cols).into_vec() } else { (0..d).collect() };
            features.sort_unstable();
            let residuals: Vec<f64> = scores.iter().zip(&y).map(|(s, yi)| yi - sigmoid(*s)).collect();
            let fit = Tree::fit(&data.matrix, &residuals, &w, (0..n).collect(), &features, &cfg, &mut rng);
            for (s, x) in scores.iter_mut().zip(&data.matrix) {
                *s += params.learning_rate * fit.tree.predict(x);
            }
            importance.iter_mut().zip(&fit.importance).for_each(|(a, v)| *a += v);
            trees.push(fit.tree);
        }
        let train_metric = match params.eval_metric {
            EvalMetric::Logloss => {
                scores
                    .iter()
                    .zip(&y)
                    .map(|(s, yi)| {
                        let p = sigmoid(*s).clamp(1e-15, 1.0 - 1e-15);
                        -(yi * p.ln() + (1.0 - yi) * (1.0 - p).ln())
                    })
                    .sum::<f64>()
                    / n.max(1) as f64
            }
            EvalMetric::Error => {
                scores.iter().zip(&y).filter(|(s, yi)| f64::from(u8::from(sigmoid(**s) >= 0.5)) != **yi).count() as f64
                    / n.max(1) as f64
            }
        };
        let model = Gbt { base_score, learning_rate: params.learning_rate, trees, eval_metric: params.eval_metric, train_metric };
        (model, importance)
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}
