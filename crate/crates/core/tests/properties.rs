mod common;

use common::oracles::{lr_gradient_check, naive_metrics, random_raw, reference_impute};
use heartprompt::data::{knn_impute, RawDataset, RawRow};
use heartprompt::metrics::{classification_metrics, confusion, cost_metrics, CostWeights, MetricsRow};
use heartprompt::rng::rng_from;
use proptest::prelude::*;

fn complete(ds: &heartprompt::Dataset) -> RawDataset {
    RawDataset {
        schema: ds.schema.clone(),
        rows: ds
            .matrix
            .iter()
            .zip(&ds.labels)
            .map(|(x, &y)| RawRow { cells: x.iter().copied().map(Some).collect(), target: y })
            .collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn imputation_fills_gaps_and_keeps_present_cells(seed in any::<u64>(), k in 1usize..=5) {
        let raw = random_raw(&mut rng_from(seed, &[]), k);
        let ds = knn_impute(&raw, k).unwrap();
        prop_assert_eq!(ds.len(), raw.n_rows());
        for (row, filled) in raw.rows.iter().zip(&ds.matrix) {
            for (cell, v) in row.cells.iter().zip(filled) {
                prop_assert!(v.is_finite());
                if let Some(orig) = cell {
                    prop_assert_eq!(orig.to_bits(), v.to_bits());
                }
            }
        }
        let reference = reference_impute(&raw, k);
        for (a, b) in ds.matrix.iter().flatten().zip(reference.iter().flatten()) {
            prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
        }
        prop_assert_eq!(knn_impute(&complete(&ds), k).unwrap(), ds);
    }

    #[test]
    fn metrics_equal_naive_recounts(seed in any::<u64>(), n in 0usize..60, w_fp in 0.05f64..1.0) {
        let mut rng = rng_from(seed, &[]);
        let truth: Vec<u8> = (0..n).map(|_| u8::from(rand::Rng::random_bool(&mut rng, 0.5))).collect();
        let preds: Vec<u8> = (0..n).map(|_| u8::from(rand::Rng::random_bool(&mut rng, 0.5))).collect();
        let w = CostWeights::new(w_fp, 1.0 - w_fp).unwrap();
        let cm = confusion(&preds, &truth).unwrap();
        let c = classification_metrics(&cm);
        let k = cost_metrics(&cm, &w);
        let got = [c.precision, c.recall, c.f1, c.accuracy, k.fp_cost, k.fn_cost, k.cost_sensitive_accuracy];
        prop_assert_eq!(got, naive_metrics(&preds, &truth, &w));
        prop_assert_eq!(MetricsRow::evaluate(&preds, &truth, &w).unwrap().values(), got);
        let dice = if cm.tp == 0 { 0.0 } else { 2.0 * cm.tp as f64 / (2 * cm.tp + cm.fp + cm.fn_) as f64 };
        prop_assert!((c.f1 - dice).abs() < 1e-12);
    }
}

#[test]
fn lr_gradient_matches_central_differences() {
    let worst = lr_gradient_check(50, 17);
    assert!(worst <= 1e-5, "max gradient error {worst:e}");
}
