//! Discrete AdaBoost (SAMME, two classes) over weighted Gini stumps.

use serde::{Deserialize, Serialize};

use super::hyper::{positive_usize, Assignment, AssignmentExt};
use super::tree::{Criterion, Tree, TreeConfig};
use super::ModelError;
use crate::data::Dataset;
use crate::rng::rng_from;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
}

impl AdaParams {
    pub fn from_assignment(a: &Assignment) -> Result<Self, ModelError> {
        let learning_rate = a.float("learning_rate")?;
        if !(learning_rate > 0.0) {
            return Err(ModelError::Hyper("learning_rate must be positive".into()));
        }
        Ok(AdaParams { n_estimators: positive_usize(a, "n_estimators")?, learning_rate })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    pub stumps: Vec<Tree>,
    pub alphas: Vec<f64>,
    /// Weighted training error of each stump under its round's weights.
    pub round_errors: Vec<f64>,
}

fn stump_label(stump: &Tree, x: &[f64]) -> u8 {
    u8::from(stump.predict(x) >= 0.5)
}

impl AdaBoost {
    /// Returns the ensemble and alpha-weighted stump importances.
    pub fn fit(data: &Dataset, params: &AdaParams, seed: u64) -> (AdaBoost, Vec<f64>) {
        let n = data.len();
        let d = data.n_features();
        let y: Vec<f64> = data.labels.iter().map(|&l| f64::from(l)).collect();
        let features: Vec<usize> = (0..d).collect();
        let cfg = TreeConfig::stump(Criterion::Gini);
        let mut weights = vec![1.0 / n as f64; n];
        let mut model = AdaBoost { stumps: Vec::new(), alphas: Vec::new(), round_errors: Vec::new() };
        let mut importance = vec![0.0; d];

        for round in 0..params.n_estimators {
            let mut rng = rng_from(seed, &[round as u64]);
            let fit = Tree::fit(&data.matrix, &y, &weights, (0..n).collect(), &features, &cfg, &mut rng);
            let wrong: Vec<bool> =
                data.matrix.iter().zip(&data.labels).map(|(x, &l)| stump_label(&fit.tree, x) != l).collect();
            let total: f64 = weights.iter().sum();
            let error = weights.iter().zip(&wrong).filter(|(_, &w)| w).map(|(v, _)| v).sum::<f64>() / total;

            let (alpha, stop) = if error <= 0.0 {
                (1.0, true)
            } else if error >= 0.5 {
                // no better than chance; keep only a first learner
                (if model.stumps.is_empty() { 1.0 } else { 0.0 }, true)
            } else {
                (params.learning_rate * ((1.0 - error) / error).ln(), false)
            };
            if alpha > 0.0 {
                let tree_total: f64 = fit.importance.iter().sum();
                if tree_total > 0.0 {
                    importance.iter_mut().zip(&fit.importance).for_each(|(acc, v)| *acc += alpha * v / tree_total);
                }
                model.stumps.push(fit.tree);
                model.alphas.push(alpha);
                model.round_errors.push(error);
            }
            if stop {
                break;
            }
            for (w, &is_wrong) in weights.iter_mut().zip(&wrong) {
                if is_wrong {
                    *w *= alpha.exp();
                }
            }
            let sum: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= sum);
        }
        (model, importance)
    }

    /// Alpha-weighted share of stumps voting 1.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let total: f64 = self.alphas.iter().sum();
        if total <= 0.0 {
            return 0.5;
        }
        let pos: f64 = self.stumps.iter().zip(&self.alphas).filter(|(s, _)| stump_label(s, x) == 1).map(|(_, a)| a).sum();
        pos / total
    }
}
