//! Naive reference implementations the library is checked against.

use heartprompt::data::{FeatureSchema, RawDataset, RawRow};
use heartprompt::metrics::CostWeights;
use heartprompt::models::logistic::Objective;
use heartprompt::rng::{rng_from, Rng};
use rand::Rng as _;

/// Small integer-valued dataset with missing cells; every row keeps one
/// present cell and every column with gaps keeps at least `k` donors.
pub fn random_raw(rng: &mut Rng, k: usize) -> RawDataset {
    let n = rng.random_range(k + 2..=24);
    let d = rng.random_range(2..=6);
    let p_missing = rng.random_range(0.0..0.4);
    let mut rows: Vec<RawRow> = (0..n)
        .map(|_| RawRow {
            cells: (0..d)
                .map(|_| (!rng.random_bool(p_missing)).then(|| f64::from(rng.random_range(-5i32..=20))))
                .collect(),
            target: u8::from(rng.random_bool(0.5)),
        })
        .collect();
    for row in rows.iter_mut() {
        if row.cells.iter().all(Option::is_none) {
            row.cells[0] = Some(1.0);
        }
    }
    for col in 0..d {
        let present = rows.iter().filter(|r| r.cells[col].is_some()).count();
        if present < k {
            for row in rows.iter_mut().take(k) {
                row.cells[col].get_or_insert(3.0);
            }
        }
    }
    RawDataset { schema: FeatureSchema::generic(d), rows }
}

/// Brute-force KNN imputation: for every gap, rank all other rows holding the
/// cell by scaled nan-Euclidean distance (index breaks ties) and average the
/// first `k`.
pub fn reference_impute(raw: &RawDataset, k: usize) -> Vec<Vec<f64>> {
    let d = raw.schema.len();
    let column = |c: usize| raw.rows.iter().filter_map(move |r| r.cells[c]);
    let lo: Vec<f64> = (0..d).map(|c| column(c).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..d).map(|c| column(c).fold(f64::NEG_INFINITY, f64::max)).collect();
    let scale = |c: usize, v: f64| if hi[c] > lo[c] { (v - lo[c]) / (hi[c] - lo[c]) } else { 0.0 };
    let distance = |a: &RawRow, b: &RawRow| -> Option<f64> {
        let mut shared = 0;
        let mut sum = 0.0;
        for c in 0..d {
            if let (Some(x), Some(y)) = (a.cells[c], b.cells[c]) {
                shared += 1;
                sum += (scale(c, x) - scale(c, y)).powi(2);
            }
        }
        (shared > 0).then(|| (sum * d as f64 / shared as f64).sqrt())
    };
    raw.rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            (0..d)
                .map(|c| {
                    if let Some(v) = row.cells[c] {
                        return v;
                    }
                    let mut cands: Vec<(f64, usize, f64)> = raw
                        .rows
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .filter_map(|(j, other)| Some((distance(row, other)?, j, other.cells[c]?)))
                        .collect();
                    cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                    if cands.is_empty() {
                        let vals: Vec<f64> = column(c).collect();
                        return vals.iter().sum::<f64>() / vals.len() as f64;
                    }
                    let take = cands.len().min(k);
                    cands[..take].iter().map(|t| t.2).sum::<f64>() / take as f64
                })
                .collect()
        })
        .collect()
}

/// The seven metrics recounted instance by instance from their definitions.
pub fn naive_metrics(preds: &[u8], truth: &[u8], w: &CostWeights) -> [f64; 7] {
    let (mut tp, mut tn, mut fp, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &t) in preds.iter().zip(truth) {
        match (p, t) {
            (1, 1) => tp += 1,
            (0, 0) => tn += 1,
            (1, 0) => fp += 1,
            _ => fn_ += 1,
        }
    }
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let precision = div(tp as f64, (tp + fp) as f64);
    let recall = div(tp as f64, (tp + fn_) as f64);
    let f1 = div(2.0 * precision * recall, precision + recall);
    let correct = (tp + tn) as f64;
    let accuracy = div(correct, preds.len() as f64);
    let fp_cost = w.w_fp * fp as f64;
    let fn_cost = w.w_fn * fn_ as f64;
    let csa = div(correct, correct + fp_cost + fn_cost);
    [precision, recall, f1, accuracy, fp_cost, fn_cost, csa]
}

/// Largest absolute gap between the analytic LR gradient and central
/// differences over `points` random parameter vectors.
pub fn lr_gradient_check(points: usize, seed: u64) -> f64 {
    let mut rng = rng_from(seed, &[]);
    let n = 40;
    let d = 5;
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let y: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
    let obj = Objective::new(&x, &y, 0.3);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let theta: Vec<f64> = (0..=d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let g = obj.gradient(&theta);
        for j in 0..=d {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[j] += h;
            minus[j] -= h;
            let numeric = (obj.loss(&plus) - obj.loss(&minus)) / (2.0 * h);
            worst = worst.max((numeric - g[j]).abs());
        }
    }
    worst
}
