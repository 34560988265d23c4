use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hyper::{positive_usize, Assignment, AssignmentExt};
use super::tree::{Criterion, Tree, TreeConfig};
use super::ModelError;
use crate::data::Dataset;
use crate::rng::rng_from;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
}

impl ForestParams {
    pub fn from_assignment(a: &Assignment) -> Result<Self, ModelError> {
        Ok(ForestParams {
            n_estimators: positive_usize(a, "n_estimators")?,
            max_depth: positive_usize(a, "max_depth")?,
            min_samples_split: positive_usize(a, "min_samples_split")?.max(2),
            min_samples_leaf: positive_usize(a, "min_samples_leaf")?,
            bootstrap: a.flag("bootstrap")?,
        })
    }
}

/// Random forest of Gini trees with `sqrt(n_features)` candidates per split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Returns the forest and its summed per-tree normalized impurity importances.
    pub fn fit(data: &Dataset, params: &ForestParams, seed: u64) -> (Forest, Vec<f64>) {
        let n = data.len();
        let d = data.n_features();
        let y: Vec<f64> = data.labels.iter().map(|&l| f64::from(l)).collect();
        let w = vec![1.0; n];
        let features: Vec<usize> = (0..d).collect();
        let cfg = TreeConfig {
            criterion: Criterion::Gini,
            max_depth: params.max_depth,
            min_samples_split: params.min_samples_split,
            min_samples_leaf: params.min_samples_leaf,
            max_features: Some(((d as f64).sqrt().floor() as usize).max(1)),
        };
        let fits: Vec<_> = (0..params.n_estimators)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_from(seed, &[t as u64]);
                let samples =
                    if params.bootstrap { (0..n).map(|_| rng.random_range(0..n)).collect() } else { (0..n).collect() };
                Tree::fit(&data.matrix, &y, &w, samples, &features, &cfg, &mut rng)
            })
            .collect();
        let mut importance = vec![0.0; d];
        for fit in &fits {
            let total: f64 = fit.importance.iter().sum();
            if total > 0.0 {
                importance.iter_mut().zip(&fit.importance).for_each(|(acc, v)| *acc += v / total);
            }
        }
        (Forest { trees: fits.into_iter().map(|f| f.tree).collect() }, importance)
    }

    /// Hard vote of one tree (ties in a leaf go to 1).
    pub fn tree_vote(tree: &Tree, x: &[f64]) -> u8 {
        u8::from(tree.predict(x) >= 0.5)
    }

    /// Fraction of trees voting 1.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let votes: usize = self.trees.iter().map(|t| usize::from(Self::tree_vote(t, x))).sum();
        votes as f64 / self.trees.len() as f64
    }
}
