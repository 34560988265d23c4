//! The six classifier families, importance rankings and randomized search.

pub mod adaboost;
pub mod artifact;
pub mod forest;
pub mod gbt;
pub mod hyper;
pub mod importance;
pub mod knn;
pub mod logistic;
pub mod mlp;
pub mod search;
pub mod tree;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Dataset, FeatureSchema};
use crate::rng::derive_seed;

pub use artifact::{ModelArtifact, ARTIFACT_VERSION};
pub use hyper::{assignment, Assignment, AssignmentExt, Dist, HyperSpace, HyperValue};
pub use importance::{permutation_importance, ImportanceEntry, ImportanceMethod, ImportanceRanking, PERMUTATION_REPEATS};
pub use search::{randomized_search, CvReport, CvTrial, DEFAULT_FOLDS, DEFAULT_N_ITER};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("hyperparameter error: {0}")]
    Hyper(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("artifact error: {0}")]
    Artifact(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Family {
    Rf,
    Lr,
    Mlp,
    Knn,
    Gbt,
    Ada,
}

impl Family {
    pub const ALL: [Family; 6] = [Family::Rf, Family::Lr, Family::Mlp, Family::Knn, Family::Gbt, Family::Ada];

    /// Row label used in reports.
    pub fn short_name(self) -> &'static str {
        match self {
            Family::Rf => "RF",
            Family::Lr => "LR",
            Family::Mlp => "MLP",
            Family::Knn => "KNN",
            Family::Gbt => "XGB",
            Family::Ada => "AdaBoost",
        }
    }

    /// Lowercase classifier tag used in domain-knowledge text.
    pub fn source_tag(self) -> &'static str {
        match self {
            Family::Rf => "randomforestclassifier",
            Family::Lr => "logisticregression",
            Family::Mlp => "mlpclassifier",
            Family::Knn => "kneighborsclassifier",
            Family::Gbt => "xgbclassifier",
            Family::Ada => "adaboostclassifier",
        }
    }

    /// Whether `train` attaches an importance ranking without being asked.
    pub fn has_native_importance(self) -> bool {
        !matches!(self, Family::Knn | Family::Mlp)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Family {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "RF" => Ok(Family::Rf),
            "LR" => Ok(Family::Lr),
            "MLP" => Ok(Family::Mlp),
            "KNN" | "KNEIGHBORS" => Ok(Family::Knn),
            "GBT" | "XGB" => Ok(Family::Gbt),
            "ADA" | "ADABOOST" => Ok(Family::Ada),
            _ => Err(ModelError::Validation(format!("unknown model family `{s}`"))),
        }
    }
}

/// A family together with its search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub space: HyperSpace,
    /// Attach permutation importance to KNN and MLP models.
    pub permutation_importance: bool,
}

impl ModelSpec {
    pub fn new(family: Family) -> Self {
        ModelSpec { family, space: HyperSpace::default_for(family), permutation_importance: false }
    }
}

/// Fitted parameters of one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FittedModel {
    Forest(forest::Forest),
    Logistic(logistic::LogisticModel),
    Mlp(mlp::Mlp),
    Knn(knn::Knn),
    Gbt(gbt::Gbt),
    Ada(adaboost::AdaBoost),
}

impl FittedModel {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        match self {
            FittedModel::Forest(m) => m.predict_proba(x),
            FittedModel::Logistic(m) => m.predict_proba(x),
            FittedModel::Mlp(m) => m.predict_proba(x),
            FittedModel::Knn(m) => m.predict_proba(x),
            FittedModel::Gbt(m) => m.predict_proba(x),
            FittedModel::Ada(m) => m.predict_proba(x),
        }
    }

    /// Thresholded prediction; probability exactly 0.5 maps to 1.
    pub fn predict_label(&self, x: &[f64]) -> u8 {
        u8::from(self.predict_proba(x) >= 0.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub family: Family,
    pub hyper: Assignment,
    pub model: FittedModel,
    pub importance: Option<ImportanceRanking>,
    /// False when an iterative solver hit its iteration cap.
    pub converged: bool,
    pub seed: u64,
    pub schema: FeatureSchema,
}

impl TrainedModel {
    pub fn predict(&self, x: &[f64]) -> Result<u8, ModelError> {
        if x.len() != self.schema.len() {
            return Err(ModelError::Validation(format!(
                "input has {} components, model expects {}",
                x.len(),
                self.schema.len()
            )));
        }
        Ok(self.model.predict_label(x))
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.predict(x)?;
        Ok(self.model.predict_proba(x))
    }

    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<u8>, ModelError> {
        data.matrix.iter().map(|x| self.predict(x)).collect()
    }

    pub fn accuracy(&self, data: &Dataset) -> Result<f64, ModelError> {
        let preds = self.predict_all(data)?;
        let hits = preds.iter().zip(&data.labels).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / data.len().max(1) as f64)
    }
}

fn check_training_data(data: &Dataset) -> Result<(), ModelError> {
    if data.is_empty() {
        return Err(ModelError::Validation("training set is empty".into()));
    }
    if data.n_features() == 0 {
        return Err(ModelError::Validation("training set has no features".into()));
    }
    Ok(())
}

/// Fits one family with a fixed assignment. Deterministic in all inputs.
pub fn train(spec: &ModelSpec, data: &Dataset, hyper: &Assignment, seed: u64) -> Result<TrainedModel, ModelError> {
    check_training_data(data)?;
    let family = spec.family;
    let schema = data.schema.clone();
    let (model, native, converged) = match family {
        Family::Rf => {
            let params = forest::ForestParams::from_assignment(hyper)?;
            let (m, raw) = forest::Forest::fit(data, &params, seed);
            (FittedModel::Forest(m), Some((raw, ImportanceMethod::Impurity)), true)
        }
        Family::Lr => {
            let params = logistic::LogisticParams::from_assignment(hyper)?;
            let fit = logistic::fit(data, &params);
            let raw: Vec<f64> = fit.model.weights.iter().map(|w| w.abs()).collect();
            (FittedModel::Logistic(fit.model), Some((raw, ImportanceMethod::Coefficient)), fit.converged)
        }
        Family::Mlp => {
            let params = mlp::MlpParams::from_assignment(hyper)?;
            let fit = mlp::fit(data, &params, seed);
            (FittedModel::Mlp(fit.model), None, fit.converged)
        }
        Family::Knn => {
            let params = knn::KnnParams::from_assignment(hyper)?;
            (FittedModel::Knn(knn::Knn::fit(data, &params)), None, true)
        }
        Family::Gbt => {
            let params = gbt::GbtParams::from_assignment(hyper)?;
            let (m, raw) = gbt::Gbt::fit(data, &params, seed);
            (FittedModel::Gbt(m), Some((raw, ImportanceMethod::Impurity)), true)
        }
        Family::Ada => {
            let params = adaboost::AdaParams::from_assignment(hyper)?;
            let (m, raw) = adaboost::AdaBoost::fit(data, &params, seed);
            (FittedModel::Ada(m), Some((raw, ImportanceMethod::Impurity)), true)
        }
    };
    let mut trained = TrainedModel { family, hyper: hyper.clone(), model, importance: None, converged, seed, schema };
    trained.importance = match native {
        Some((raw, method)) => Some(ImportanceRanking::from_raw(&trained.schema, &raw, family, method)?),
        None if spec.permutation_importance => Some(permutation_ranking(&trained, data)?),
        None => None,
    };
    Ok(trained)
}

fn permutation_ranking(model: &TrainedModel, data: &Dataset) -> Result<ImportanceRanking, ModelError> {
    let raw = permutation_importance(
        |x| model.model.predict_label(x),
        data,
        PERMUTATION_REPEATS,
        derive_seed(model.seed, &[0x5045_524d]),
    );
    ImportanceRanking::from_raw(&model.schema, &raw, model.family, ImportanceMethod::Permutation)
}

/// The model's attached ranking, or permutation importance on `train` for
/// families without a native one.
pub fn feature_importance(model: &TrainedModel, train: &Dataset) -> Result<ImportanceRanking, ModelError> {
    if let Some(r) = &model.importance {
        return Ok(r.clone());
    }
    if train.n_features() != model.schema.len() {
        return Err(ModelError::Validation("dataset arity does not match the model".into()));
    }
    permutation_ranking(model, train)
}
