//! Loading, cleaning, imputation and splitting of the heart-disease table.

mod impute;
mod ingest;
mod scale;
mod schema;
mod split;

pub use impute::{knn_impute, DEFAULT_IMPUTE_K};
pub use ingest::{binarize_target, load_csv, load_path, load_uci_dir, stats, write_csv, UCI_SITE_FILES};
pub use scale::{standardize, Scaler};
pub use schema::{FeatureDescriptor, FeatureKind, FeatureSchema, HEART_FEATURE_COUNT, TARGET_COLUMN};
pub use split::{split, split_indices, stratified_folds};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("imputation error in column `{column}`: {message}")]
    Imputation { column: String, message: String },
    #[error("stratification error: {0}")]
    Stratification(String),
}

/// One raw record: optional cells plus the original diagnosis code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub cells: Vec<Option<f64>>,
    pub target: u8,
}

impl RawRow {
    pub fn has_missing(&self) -> bool {
        self.cells.iter().any(Option::is_none)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDataset {
    pub schema: FeatureSchema,
    pub rows: Vec<RawRow>,
}

impl RawDataset {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn missing_cells(&self) -> usize {
        self.rows.iter().map(|r| r.cells.iter().filter(|c| c.is_none()).count()).sum()
    }
}

/// Fully numeric dataset with binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub matrix: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn new(schema: FeatureSchema, matrix: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self, DataError> {
        if matrix.len() != labels.len() {
            return Err(DataError::Validation(format!(
                "{} rows but {} labels",
                matrix.len(),
                labels.len()
            )));
        }
        if let Some((i, row)) = matrix.iter().enumerate().find(|(_, r)| r.len() != schema.len()) {
            return Err(DataError::Validation(format!(
                "row {i} has {} values, schema has {}",
                row.len(),
                schema.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(DataError::Validation(format!("label {bad} is not binary")));
        }
        if matrix.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DataError::Validation("non-finite cell".into()));
        }
        Ok(Dataset { schema, matrix, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            matrix: indices.iter().map(|&i| self.matrix[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Label held by the majority of rows; ties go to 1.
    pub fn majority_label(&self) -> u8 {
        u8::from(2 * self.positives() >= self.len())
    }
}

/// Summary counts over a raw dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_total: usize,
    pub n_with_missing: usize,
    pub male_fraction: f64,
    pub female_fraction: f64,
    pub prevalence_male: f64,
    pub prevalence_female: f64,
}
