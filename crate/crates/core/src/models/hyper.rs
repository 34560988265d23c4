//! Hyperparameter spaces and sampled assignments.

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Family, ModelError};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
    IntList(Vec<i64>),
}

impl std::fmt::Display for HyperValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HyperValue::Bool(b) => write!(f, "{b}"),
            HyperValue::Int(i) => write!(f, "{i}"),
            HyperValue::Float(x) => write!(f, "{x}"),
            HyperValue::Text(s) => write!(f, "{s}"),
            HyperValue::IntList(v) => write!(f, "{v:?}"),
        }
    }
}

/// Sampling distribution for one named parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Dist {
    /// Inclusive integer range.
    IntRange(i64, i64),
    Uniform(f64, f64),
    LogUniform(f64, f64),
    Choice(Vec<HyperValue>),
    /// Recorded in every assignment but never varied.
    Fixed(HyperValue),
}

impl Dist {
    fn sample(&self, rng: &mut Rng) -> HyperValue {
        match self {
            Dist::IntRange(lo, hi) => HyperValue::Int(rng.random_range(*lo..=*hi)),
            Dist::Uniform(lo, hi) => HyperValue::Float(rng.random_range(*lo..=*hi)),
            Dist::LogUniform(lo, hi) => HyperValue::Float(rng.random_range(lo.ln()..=hi.ln()).exp()),
            Dist::Choice(options) => options[rng.random_range(0..options.len())].clone(),
            Dist::Fixed(v) => v.clone(),
        }
    }
}

pub type Assignment = BTreeMap<String, HyperValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperSpace {
    pub params: Vec<(String, Dist)>,
}

impl HyperSpace {
    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn sample(&self, rng: &mut Rng) -> Assignment {
        self.params.iter().map(|(name, dist)| (name.clone(), dist.sample(rng))).collect()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|(n, _)| n.as_str())
    }

    /// Search space used for randomized tuning of each family.
    pub fn default_for(family: Family) -> Self {
        use Dist::*;
        use HyperValue::*;
        let text = |s: &[&str]| Choice(s.iter().map(|v| Text((*v).into())).collect());
        let params: Vec<(&str, Dist)> = match family {
            Family::Rf => vec![
                ("n_estimators", IntRange(50, 400)),
                ("max_depth", IntRange(2, 12)),
                ("min_samples_split", IntRange(2, 10)),
                ("min_samples_leaf", IntRange(1, 5)),
                ("bootstrap", Choice(vec![Bool(true), Bool(false)])),
            ],
            Family::Lr => vec![
                ("C", LogUniform(1e-3, 1e2)),
                ("penalty", text(&["l2", "none"])),
                ("solver", text(&["gd", "newton"])),
            ],
            Family::Mlp => vec![
                (
                    "hidden_layer_sizes",
                    Choice(vec![IntList(vec![16]), IntList(vec![32]), IntList(vec![64]), IntList(vec![32, 16])]),
                ),
                ("activation", text(&["relu", "tanh", "logistic"])),
                ("solver", text(&["adam", "sgd"])),
                ("alpha", LogUniform(1e-5, 1e-1)),
                ("learning_rate", text(&["constant", "invscaling", "adaptive"])),
                ("learning_rate_init", LogUniform(1e-3, 5e-2)),
                ("tol", LogUniform(1e-5, 1e-3)),
                ("max_iter", IntRange(100, 400)),
            ],
            Family::Knn => vec![
                ("n_neighbors", IntRange(1, 30)),
                ("weights", text(&["uniform", "distance"])),
                ("algorithm", text(&["brute", "kd_tree"])),
                ("leaf_size", IntRange(10, 50)),
                ("p", Choice(vec![Int(1), Int(2)])),
            ],
            Family::Gbt => vec![
                ("use_label_encoder", Fixed(Bool(false))),
                ("eval_metric", text(&["logloss", "error"])),
                ("n_estimators", IntRange(50, 300)),
                ("learning_rate", LogUniform(0.01, 0.3)),
                ("max_depth", IntRange(2, 6)),
                ("colsample_bytree", Uniform(0.5, 1.0)),
            ],
            Family::Ada => vec![("n_estimators", IntRange(25, 300)), ("learning_rate", LogUniform(0.01, 2.0))],
        };
        HyperSpace { params: params.into_iter().map(|(n, d)| (n.to_string(), d)).collect() }
    }
}

/// Typed lookups on an assignment.
pub trait AssignmentExt {
    fn value(&self, name: &str) -> Result<&HyperValue, ModelError>;
    fn int(&self, name: &str) -> Result<i64, ModelError>;
    fn float(&self, name: &str) -> Result<f64, ModelError>;
    fn flag(&self, name: &str) -> Result<bool, ModelError>;
    fn text(&self, name: &str) -> Result<&str, ModelError>;
    fn int_list(&self, name: &str) -> Result<Vec<i64>, ModelError>;
}

fn wrong_type(name: &str, want: &str, got: &HyperValue) -> ModelError {
    ModelError::Hyper(format!("`{name}` should be {want}, got {got}"))
}

impl AssignmentExt for Assignment {
    fn value(&self, name: &str) -> Result<&HyperValue, ModelError> {
        self.get(name).ok_or_else(|| ModelError::Hyper(format!("missing hyperparameter `{name}`")))
    }

    fn int(&self, name: &str) -> Result<i64, ModelError> {
        match self.value(name)? {
            HyperValue::Int(i) => Ok(*i),
            other => Err(wrong_type(name, "an integer", other)),
        }
    }

    fn float(&self, name: &str) -> Result<f64, ModelError> {
        match self.value(name)? {
            HyperValue::Float(x) => Ok(*x),
            HyperValue::Int(i) => Ok(*i as f64),
            other => Err(wrong_type(name, "a number", other)),
        }
    }

    fn flag(&self, name: &str) -> Result<bool, ModelError> {
        match self.value(name)? {
            HyperValue::Bool(b) => Ok(*b),
            other => Err(wrong_type(name, "a boolean", other)),
        }
    }

    fn text(&self, name: &str) -> Result<&str, ModelError> {
        match self.value(name)? {
            HyperValue::Text(s) => Ok(s),
            other => Err(wrong_type(name, "a string", other)),
        }
    }

    fn int_list(&self, name: &str) -> Result<Vec<i64>, ModelError> {
        match self.value(name)? {
            HyperValue::IntList(v) => Ok(v.clone()),
            HyperValue::Int(i) => Ok(vec![*i]),
            other => Err(wrong_type(name, "an integer list", other)),
        }
    }
}

/// Builds an assignment from literal pairs.
pub fn assignment<I, K>(pairs: I) -> Assignment
where
    I: IntoIterator<Item = (K, HyperValue)>,
    K: Into<String>,
{
    pairs.into_iter().map(|(k, v)| (k.into(), v)).collect()
}

pub(crate) fn positive_usize(a: &Assignment, name: &str) -> Result<usize, ModelError> {
    let v = a.int(name)?;
    if v < 1 {
        return Err(ModelError::Hyper(format!("`{name}` must be at least 1, got {v}")));
    }
    Ok(v as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;

    #[test]
    fn parameter_counts_follow_the_family_table() {
        let counts: Vec<usize> = Family::ALL.iter().map(|&f| HyperSpace::default_for(f).len()).collect();
        assert_eq!(counts, [5, 3, 8, 5, 6, 2]);
        assert_eq!(counts.iter().sum::<usize>(), 29);
    }

    #[test]
    fn samples_stay_in_range() {
        let space = HyperSpace::default_for(Family::Rf);
        let mut rng = rng_from(3, &[]);
        for _ in 0..200 {
            let a = space.sample(&mut rng);
            let n = a.int("n_estimators").unwrap();
            assert!((50..=400).contains(&n));
            assert!((1..=5).contains(&a.int("min_samples_leaf").unwrap()));
        }
        let lr = HyperSpace::default_for(Family::Lr);
        for _ in 0..200 {
            let c = lr.sample(&mut rng).float("C").unwrap();
            assert!((1e-3..=1e2 + 1e-9).contains(&c));
        }
    }

    #[test]
    fn assignment_json_round_trip() {
        let space = HyperSpace::default_for(Family::Mlp);
        let a = space.sample(&mut rng_from(1, &[]));
        let json = serde_json::to_string(&a).unwrap();
        let back: Assignment = serde_json::from_str(&json).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn typed_lookup_errors() {
        let a = assignment([("k", HyperValue::Text("x".into()))]);
        assert!(a.int("k").is_err());
        assert!(a.int("missing").is_err());
    }
}
