use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Family, ModelError};
use crate::data::{Dataset, FeatureSchema};
use crate::rng::rng_from;

/// Shuffles per feature for permutation importance.
pub const PERMUTATION_REPEATS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMethod {
    /// Weighted impurity decrease summed over tree splits.
    Impurity,
    /// Absolute coefficients of a linear model on standardized features.
    Coefficient,
    /// Mean accuracy drop after shuffling a column.
    Permutation,
    /// Supplied ordering with synthetic weights.
    Fixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub feature: String,
    pub weight: f64,
}

/// Normalized feature weights, heaviest first; ties keep schema order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    pub source: Family,
    pub method: ImportanceMethod,
    pub entries: Vec<ImportanceEntry>,
    /// Set when every raw importance was zero and the ranking fell back to uniform.
    pub degenerate: bool,
}

impl ImportanceRanking {
    pub fn from_raw(
        schema: &FeatureSchema,
        raw: &[f64],
        source: Family,
        method: ImportanceMethod,
    ) -> Result<Self, ModelError> {
        if raw.len() != schema.len() {
            return Err(ModelError::Validation(format!(
                "{} importances for {} features",
                raw.len(),
                schema.len()
            )));
        }
        let clipped: Vec<f64> = raw.iter().map(|&v| if v.is_finite() && v > 0.0 { v } else { 0.0 }).collect();
        let total: f64 = clipped.iter().sum();
        let degenerate = !(total > 0.0);
        let weights: Vec<f64> = if degenerate {
            vec![1.0 / schema.len() as f64; schema.len()]
        } else {
            clipped.iter().map(|v| v / total).collect()
        };
        let mut entries: Vec<ImportanceEntry> = schema
            .names()
            .zip(weights)
            .map(|(name, weight)| ImportanceEntry { feature: name.to_string(), weight })
            .collect();
        // stable sort keeps canonical order among equal weights
        entries.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        Ok(ImportanceRanking { source, method, entries, degenerate })
    }

    /// Builds a ranking from an ordered feature list, most important first,
    /// with strictly decreasing weights `(n - i) / sum`.
    pub fn from_order(schema: &FeatureSchema, order: &[&str], source: Family) -> Result<Self, ModelError> {
        if order.len() != schema.len() {
            return Err(ModelError::Validation(format!("{} names for {} features", order.len(), schema.len())));
        }
        let n = order.len();
        let mut raw = vec![f64::NAN; n];
        for (rank, name) in order.iter().enumerate() {
            let idx = schema
                .index_of(name)
                .ok_or_else(|| ModelError::Validation(format!("unknown feature `{name}`")))?;
            if !raw[idx].is_nan() {
                return Err(ModelError::Validation(format!("feature `{name}` listed twice")));
            }
            raw[idx] = (n - rank) as f64;
        }
        Self::from_raw(schema, &raw, source, ImportanceMethod::Fixture)
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.feature.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks the ranking invariants against `schema`.
    pub fn validate(&self, schema: &FeatureSchema) -> Result<(), ModelError> {
        if self.entries.len() != schema.len() {
            return Err(ModelError::Validation(format!(
                "ranking has {} entries, expected {}",
                self.entries.len(),
                schema.len()
            )));
        }
        let mut seen = vec![false; schema.len()];
        for e in &self.entries {
            let idx = schema
                .index_of(&e.feature)
                .ok_or_else(|| ModelError::Validation(format!("unknown feature `{}`", e.feature)))?;
            if std::mem::replace(&mut seen[idx], true) {
                return Err(ModelError::Validation(format!("feature `{}` appears twice", e.feature)));
            }
            if !(e.weight >= 0.0) {
                return Err(ModelError::Validation(format!("negative weight for `{}`", e.feature)));
            }
        }
        let sum: f64 = self.entries.iter().map(|e| e.weight).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ModelError::Validation(format!("weights sum to {sum}")));
        }
        for pair in self.entries.windows(2) {
            let ordered = pair[0].weight > pair[1].weight
                || (pair[0].weight == pair[1].weight
                    && schema.index_of(&pair[0].feature) < schema.index_of(&pair[1].feature));
            if !ordered {
                return Err(ModelError::Validation("entries are not sorted by weight".into()));
            }
        }
        Ok(())
    }
}

/// Mean accuracy drop per feature when its column is shuffled, over
/// `repeats` seeded shuffles. Negative drops are kept as-is.
pub fn permutation_importance<F>(predict: F, data: &Dataset, repeats: usize, seed: u64) -> Vec<f64>
where
    F: Fn(&[f64]) -> u8,
{
    let accuracy = |matrix: &[Vec<f64>]| {
        matrix.iter().zip(&data.labels).filter(|(x, &y)| predict(x) == y).count() as f64 / data.len().max(1) as f64
    };
    let baseline = accuracy(&data.matrix);
    (0..data.n_features())
        .map(|j| {
            let mut total = 0.0;
            for r in 0..repeats {
                let mut rng = rng_from(seed, &[j as u64, r as u64]);
                let mut column: Vec<f64> = data.matrix.iter().map(|row| row[j]).collect();
                column.shuffle(&mut rng);
                let permuted: Vec<Vec<f64>> = data
                    .matrix
                    .iter()
                    .zip(column)
                    .map(|(row, v)| {
                        let mut row = row.clone();
                        row[j] = v;
                        row
                    })
                    .collect();
                total += baseline - accuracy(&permuted);
            }
            total / repeats.max(1) as f64
        })
        .collect()
}
