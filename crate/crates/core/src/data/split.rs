use rand::seq::SliceRandom;

use super::{DataError, Dataset};
use crate::rng::rng_from;

const SPLIT_STREAM: u64 = 0x5311;
const FOLD_STREAM: u64 = 0xF01D;

fn class_members(labels: &[u8]) -> [Vec<usize>; 2] {
    let mut members = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        members[usize::from(l)].push(i);
    }
    members
}

/// Stratified train/test partition of row indices, both sorted ascending.
///
/// The test size is `round(test_fraction * n)`, allotted to classes by
/// largest remainder so each class keeps its share to within one row.
pub fn split_indices(labels: &[u8], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::Validation(format!("test_fraction {test_fraction} not in (0, 1)")));
    }
    let members = class_members(labels);
    for (class, m) in members.iter().enumerate() {
        if m.len() < 2 {
            return Err(DataError::Stratification(format!("class {class} has {} members, need at least 2", m.len())));
        }
    }
    let n = labels.len();
    let total = ((test_fraction * n as f64).round() as usize).clamp(2, n - 2);
    let exact: Vec<f64> = members.iter().map(|m| test_fraction * m.len() as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut by_remainder = [0usize, 1];
    by_remainder.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let mut assigned: usize = quota.iter().sum();
    for &c in by_remainder.iter().cycle().take(4) {
        if assigned >= total {
            break;
        }
        if quota[c] + 1 < members[c].len() {
            quota[c] += 1;
            assigned += 1;
        }
    }
    for (c, m) in members.iter().enumerate() {
        quota[c] = quota[c].clamp(1, m.len() - 1);
    }

    let mut rng = rng_from(seed, &[SPLIT_STREAM]);
    let mut train = Vec::with_capacity(n);
    let mut test = Vec::with_capacity(total);
    for (c, m) in members.iter().enumerate() {
        let mut shuffled = m.clone();
        shuffled.shuffle(&mut rng);
        test.extend_from_slice(&shuffled[..quota[c]]);
        train.extend_from_slice(&shuffled[quota[c]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Deterministic stratified train/test split.
pub fn split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    let (train, test) = split_indices(&ds.labels, test_fraction, seed)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Assigns each row to one of `k` folds, dealing each shuffled class
/// round-robin so folds stay stratified. Returns the fold of every row.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from(seed, &[FOLD_STREAM]);
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0;
    for m in class_members(labels) {
        let mut shuffled = m;
        shuffled.shuffle(&mut rng);
        for i in shuffled {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    fold_of
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSchema;

    fn labels(pos: usize, neg: usize) -> Vec<u8> {
        let mut l = vec![1u8; pos];
        l.extend(vec![0u8; neg]);
        l
    }

    #[test]
    fn uci_sized_split_has_184_test_rows() {
        let l = labels(509, 411);
        let (train, test) = split_indices(&l, 0.2, 42).unwrap();
        assert_eq!(test.len(), 184);
        assert_eq!(train.len(), 736);
        let test_pos = test.iter().filter(|&&i| l[i] == 1).count();
        assert_eq!(test_pos, 102);
    }

    #[test]
    fn ten_rows_give_one_per_class() {
        let l = labels(5, 5);
        let (_, test) = split_indices(&l, 0.2, 1).unwrap();
        assert_eq!(test.len(), 2);
        assert_eq!(test.iter().filter(|&&i| l[i] == 1).count(), 1);
    }

    #[test]
    fn deterministic_per_seed() {
        let l = labels(40, 35);
        assert_eq!(split_indices(&l, 0.3, 9).unwrap(), split_indices(&l, 0.3, 9).unwrap());
        assert_ne!(split_indices(&l, 0.3, 9).unwrap(), split_indices(&l, 0.3, 10).unwrap());
    }

    #[test]
    fn rejects_tiny_class() {
        assert!(matches!(split_indices(&labels(1, 8), 0.2, 0), Err(DataError::Stratification(_))));
        assert!(matches!(split_indices(&labels(4, 4), 1.0, 0), Err(DataError::Validation(_))));
    }

    #[test]
    fn split_dataset_partitions_rows() {
        let schema = FeatureSchema::generic(1);
        let matrix: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let l = labels(10, 10);
        let ds = Dataset::new(schema, matrix, l).unwrap();
        let (train, test) = split(&ds, 0.25, 3).unwrap();
        assert_eq!(train.len() + test.len(), 20);
        let mut all: Vec<f64> = train.matrix.iter().chain(&test.matrix).map(|r| r[0]).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..20).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn folds_are_balanced() {
        let l = labels(10, 10);
        let folds = stratified_folds(&l, 5, 0);
        for f in 0..5 {
            let members: Vec<usize> = (0..20).filter(|&i| folds[i] == f).collect();
            assert_eq!(members.len(), 4);
            assert_eq!(members.iter().filter(|&&i| l[i] == 1).count(), 2);
        }
    }
}
