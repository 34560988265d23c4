use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};

/// Per-feature z-score parameters fitted on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    /// Population standard deviation; 1 for constant columns.
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(ds: &Dataset) -> Result<Self, DataError> {
        if ds.is_empty() {
            return Err(DataError::Validation("cannot fit a scaler on an empty dataset".into()));
        }
        let n = ds.len() as f64;
        let d = ds.n_features();
        let mut mean = vec![0.0; d];
        for row in &ds.matrix {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in &ds.matrix {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Scaler { mean, std })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn inverse_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| v * s + m).collect()
    }

    pub fn transform(&self, ds: &Dataset) -> Dataset {
        Dataset {
            schema: ds.schema.clone(),
            matrix: ds.matrix.iter().map(|r| self.transform_row(r)).collect(),
            labels: ds.labels.clone(),
        }
    }

    pub fn inverse_transform(&self, ds: &Dataset) -> Dataset {
        Dataset {
            schema: ds.schema.clone(),
            matrix: ds.matrix.iter().map(|r| self.inverse_row(r)).collect(),
            labels: ds.labels.clone(),
        }
    }
}

/// Fits a scaler on `train` and applies it to both sets.
pub fn standardize(train: &Dataset, test: &Dataset) -> Result<(Dataset, Dataset, Scaler), DataError> {
    let scaler = Scaler::fit(train)?;
    Ok((scaler.transform(train), scaler.transform(test), scaler))
}
