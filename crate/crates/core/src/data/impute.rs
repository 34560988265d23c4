use std::cmp::Ordering;

use super::{DataError, Dataset, RawDataset};

pub const DEFAULT_IMPUTE_K: usize = 5;

/// Fills missing cells with the mean of the `k` nearest donor rows.
///
/// Distances are Euclidean over min-max scaled features, restricted to the
/// dimensions present in both rows and rescaled by `n_features / shared`.
/// Donors for a cell are the rows where that cell is present in the raw
/// data; ties in distance go to the lower row index. Present cells are
/// copied through untouched. Labels must already be binary.
pub fn knn_impute(raw: &RawDataset, k: usize) -> Result<Dataset, DataError> {
    if k == 0 {
        return Err(DataError::Validation("k must be at least 1".into()));
    }
    let n_features = raw.schema.len();
    let n = raw.rows.len();

    for (col, feature) in raw.schema.features.iter().enumerate() {
        let present = raw.rows.iter().filter(|r| r.cells[col].is_some()).count();
        let needs = raw.rows.iter().any(|r| r.cells[col].is_none());
        if needs && present == 0 {
            return Err(DataError::Imputation { column: feature.name.clone(), message: "column is entirely missing".into() });
        }
        if needs && present < k {
            return Err(DataError::Imputation {
                column: feature.name.clone(),
                message: format!("only {present} donors available for k={k}"),
            });
        }
    }
    if let Some(i) = raw.rows.iter().position(|r| r.cells.iter().all(Option::is_none)) {
        return Err(DataError::Validation(format!("row {i} has no present cells")));
    }

    let scaled = min_max_scale(raw);
    let mut matrix = Vec::with_capacity(n);
    for (i, row) in raw.rows.iter().enumerate() {
        if !row.has_missing() {
            matrix.push(row.cells.iter().map(|c| c.expect("complete row")).collect());
            continue;
        }
        let distances: Vec<f64> = (0..n)
            .map(|j| if j == i { f64::INFINITY } else { nan_euclidean(&scaled[i], &scaled[j], n_features) })
            .collect();
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| distances[a].partial_cmp(&distances[b]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));

        let mut filled = Vec::with_capacity(n_features);
        for (col, cell) in row.cells.iter().enumerate() {
            if let Some(v) = cell {
                filled.push(*v);
                continue;
            }
            let donors: Vec<f64> = order
                .iter()
                .filter(|&&j| distances[j].is_finite())
                .filter_map(|&j| raw.rows[j].cells[col])
                .take(k)
                .collect();
            let value = if donors.is_empty() {
                // no donor shares a dimension with this row
                column_mean(raw, col)
            } else {
                donors.iter().sum::<f64>() / donors.len() as f64
            };
            filled.push(value);
        }
        matrix.push(filled);
    }

    let labels = raw.rows.iter().map(|r| r.target).collect();
    Dataset::new(raw.schema.clone(), matrix, labels).map_err(|e| match e {
        DataError::Validation(msg) if msg.contains("not binary") => {
            DataError::Validation(format!("{msg}; binarize targets before imputation"))
        }
        other => other,
    })
}

fn column_mean(raw: &RawDataset, col: usize) -> f64 {
    let values: Vec<f64> = raw.rows.iter().filter_map(|r| r.cells[col]).collect();
    values.iter().sum::<f64>() / values.len() as f64
}

fn min_max_scale(raw: &RawDataset) -> Vec<Vec<Option<f64>>> {
    let n_features = raw.schema.len();
    let mut lo = vec![f64::INFINITY; n_features];
    let mut hi = vec![f64::NEG_INFINITY; n_features];
    for row in &raw.rows {
        for (c, v) in row.cells.iter().enumerate() {
            if let Some(v) = v {
                lo[c] = lo[c].min(*v);
                hi[c] = hi[c].max(*v);
            }
        }
    }
    raw.rows
        .iter()
        .map(|row| {
            row.cells
                .iter()
                .enumerate()
                .map(|(c, v)| {
                    v.map(|v| {
                        let range = hi[c] - lo[c];
                        if range > 0.0 {
                            (v - lo[c]) / range
                        } else {
                            0.0
                        }
                    })
                })
                .collect()
        })
        .collect()
}

fn nan_euclidean(a: &[Option<f64>], b: &[Option<f64>], n_features: usize) -> f64 {
    let mut shared = 0usize;
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        if let (Some(x), Some(y)) = (x, y) {
            shared += 1;
            sum += (x - y) * (x - y);
        }
    }
    if shared == 0 {
        f64::INFINITY
    } else {
        (sum * n_features as f64 / shared as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureSchema, RawRow};

    fn raw(rows: Vec<Vec<Option<f64>>>) -> RawDataset {
        let n = rows.first().map_or(0, Vec::len);
        RawDataset {
            schema: FeatureSchema::generic(n),
            rows: rows.into_iter().enumerate().map(|(i, cells)| RawRow { cells, target: (i % 2) as u8 }).collect(),
        }
    }

    fn abc() -> RawDataset {
        raw(vec![vec![Some(1.0), Some(2.0)], vec![Some(1.1), None], vec![Some(9.0), Some(10.0)]])
    }

    #[test]
    fn nearest_neighbour_fills_from_closest_row() {
        let ds = knn_impute(&abc(), 1).unwrap();
        assert_eq!(ds.matrix[1], vec![1.1, 2.0]);
    }

    #[test]
    fn two_neighbours_average() {
        let ds = knn_impute(&abc(), 2).unwrap();
        assert_eq!(ds.matrix[1][1], 6.0);
    }

    #[test]
    fn complete_data_is_identity() {
        let r = raw(vec![vec![Some(1.5), Some(-2.0)], vec![Some(0.25), Some(7.0)]]);
        let ds = knn_impute(&r, 1).unwrap();
        assert_eq!(ds.matrix, vec![vec![1.5, -2.0], vec![0.25, 7.0]]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        // rows 0 and 2 are equidistant from row 1
        let r = raw(vec![vec![Some(0.0), Some(5.0)], vec![Some(1.0), None], vec![Some(2.0), Some(9.0)]]);
        let ds = knn_impute(&r, 1).unwrap();
        assert_eq!(ds.matrix[1][1], 5.0);
    }

    #[test]
    fn entirely_missing_column_is_named() {
        let r = raw(vec![vec![Some(1.0), None], vec![Some(2.0), None]]);
        match knn_impute(&r, 1) {
            Err(DataError::Imputation { column, .. }) => assert_eq!(column, "f2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn too_few_donors_is_an_error() {
        assert!(matches!(knn_impute(&abc(), 3), Err(DataError::Imputation { .. })));
    }

    #[test]
    fn empty_row_is_rejected() {
        let r = raw(vec![vec![Some(1.0), Some(2.0)], vec![None, None]]);
        assert!(matches!(knn_impute(&r, 1), Err(DataError::Validation(_))));
    }

    #[test]
    fn unbinarized_targets_are_rejected() {
        let mut r = abc();
        r.rows[0].target = 3;
        assert!(matches!(knn_impute(&r, 1), Err(DataError::Validation(_))));
    }

    #[test]
    fn shared_dimension_rescaling() {
        // row 1 shares only the first dimension with row 0 and both with row 2
        let r = raw(vec![
            vec![Some(0.0), None, Some(100.0)],
            vec![Some(0.0), Some(0.0), None],
            vec![Some(0.1), Some(0.0), Some(0.0)],
            vec![Some(1.0), Some(1.0), Some(50.0)],
        ]);
        let ds = knn_impute(&r, 1).unwrap();
        // d(1,0) = sqrt(0 * 3/1) = 0 beats d(1,2) = sqrt(0.01 * 3/2)
        assert_eq!(ds.matrix[1][2], 100.0);
        // row 0 is at distance 0 from row 1 as well
        assert_eq!(ds.matrix[0][1], 0.0);
    }
}
