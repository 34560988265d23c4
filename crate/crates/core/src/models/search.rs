//! Randomized hyperparameter search with stratified k-fold scoring.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train, Assignment, ModelError, ModelSpec, TrainedModel};
use crate::data::{stratified_folds, Dataset};
use crate::rng::{derive_seed, rng_from};

pub const DEFAULT_N_ITER: usize = 20;
pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvTrial {
    pub hyper: Assignment,
    /// Held-out accuracy per fold; `None` for excluded degenerate folds.
    pub fold_scores: Vec<Option<f64>>,
    /// Mean over scored folds; `None` when every fold was excluded.
    pub mean_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub trials: Vec<CvTrial>,
    pub best_index: usize,
    pub warnings: Vec<String>,
}

impl CvReport {
    pub fn best(&self) -> &CvTrial {
        &self.trials[self.best_index]
    }
}

/// Samples `n_iter` assignments, scores each by mean stratified-fold accuracy
/// and refits the best one (first on ties) on all of `data`.
pub fn randomized_search(
    spec: &ModelSpec,
    data: &Dataset,
    n_iter: usize,
    folds: usize,
    seed: u64,
) -> Result<(TrainedModel, CvReport), ModelError> {
    if n_iter == 0 {
        return Err(ModelError::Validation("n_iter must be at least 1".into()));
    }
    if folds < 2 {
        return Err(ModelError::Validation("need at least 2 folds".into()));
    }
    for class in [0u8, 1] {
        let count = data.labels.iter().filter(|&&l| l == class).count();
        if count < folds {
            return Err(ModelError::Validation(format!(
                "class {class} has {count} members, fewer than {folds} folds"
            )));
        }
    }

    let mut rng = rng_from(seed, &[0]);
    let assignments: Vec<Assignment> = (0..n_iter).map(|_| spec.space.sample(&mut rng)).collect();
    let fold_of = stratified_folds(&data.labels, folds, derive_seed(seed, &[1]));
    let fold_sets: Vec<(Dataset, Dataset)> = (0..folds)
        .map(|f| {
            let (fit_idx, held_idx): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| fold_of[i] != f);
            (data.subset(&fit_idx), data.subset(&held_idx))
        })
        .collect();

    let single_class = |d: &Dataset| d.positives() == 0 || d.positives() == d.len();
    let mut warnings = Vec::new();
    let usable: Vec<bool> = fold_sets
        .iter()
        .enumerate()
        .map(|(f, (fit, held))| {
            let ok = !single_class(fit) && !single_class(held);
            if !ok {
                warnings.push(format!("fold {f} contains a single class and was excluded"));
            }
            ok
        })
        .collect();

    let trials: Vec<CvTrial> = assignments
        .into_par_iter()
        .enumerate()
        .map(|(t, hyper)| -> Result<CvTrial, ModelError> {
            let fold_scores = fold_sets
                .iter()
                .enumerate()
                .map(|(f, (fit, held))| {
                    if !usable[f] {
                        return Ok(None);
                    }
                    let model = train(spec, fit, &hyper, derive_seed(seed, &[3, t as u64, f as u64]))?;
                    Ok(Some(model.accuracy(held)?))
                })
                .collect::<Result<Vec<_>, ModelError>>()?;
            let scored: Vec<f64> = fold_scores.iter().flatten().copied().collect();
            let mean_score = (!scored.is_empty()).then(|| scored.iter().sum::<f64>() / scored.len() as f64);
            Ok(CvTrial { hyper, fold_scores, mean_score })
        })
        .collect::<Result<_, _>>()?;

    let best_index = trials
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |best, (i, t)| match (best, t.mean_score) {
            (_, None) => best,
            (Some((_, b)), Some(s)) if s <= b => best,
            (_, Some(s)) => Some((i, s)),
        })
        .map_or(0, |(i, _)| i);
    if trials.iter().all(|t| t.mean_score.is_none()) {
        warnings.push("no fold could be scored; keeping the first trial".into());
    }

    let best = train(spec, data, &trials[best_index].hyper, derive_seed(seed, &[2, best_index as u64]))?;
    Ok((best, CvReport { trials, best_index, warnings }))
}
