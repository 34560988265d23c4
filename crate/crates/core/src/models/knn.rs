//! k-nearest-neighbour classifier with brute-force and kd-tree search.
//!
//! Neighbours are ordered by `(distance, training index)`, so both search
//! strategies return identical neighbour lists.

use serde::{Deserialize, Serialize};

use super::hyper::{positive_usize, Assignment, AssignmentExt};
use super::ModelError;
use crate::data::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Uniform,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Brute,
    KdTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub n_neighbors: usize,
    pub weights: Weighting,
    pub algorithm: Algorithm,
    pub leaf_size: usize,
    /// Minkowski exponent.
    pub p: u32,
}

impl KnnParams {
    pub fn from_assignment(a: &Assignment) -> Result<Self, ModelError> {
        let weights = match a.text("weights")? {
            "uniform" => Weighting::Uniform,
            "distance" => Weighting::Distance,
            other => return Err(ModelError::Hyper(format!("unknown weights `{other}`"))),
        };
        let algorithm = match a.text("algorithm")? {
            "brute" => Algorithm::Brute,
            "kd_tree" => Algorithm::KdTree,
            other => return Err(ModelError::Hyper(format!("unknown algorithm `{other}`"))),
        };
        Ok(KnnParams {
            n_neighbors: positive_usize(a, "n_neighbors")?,
            weights,
            algorithm,
            leaf_size: positive_usize(a, "leaf_size")?,
            p: positive_usize(a, "p")? as u32,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum KdNode {
    Leaf(Vec<usize>),
    Split { dim: usize, value: f64, left: Box<KdNode>, right: Box<KdNode> },
}

impl KdNode {
    fn build(x: &[Vec<f64>], mut idx: Vec<usize>, leaf_size: usize) -> KdNode {
        if idx.len() <= leaf_size.max(1) {
            return KdNode::Leaf(idx);
        }
        let d = x[idx[0]].len();
        let spread = |k: usize| {
            let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| (lo.min(x[i][k]), hi.max(x[i][k])));
            hi - lo
        };
        let dim = (0..d).fold(0, |best, k| if spread(k) > spread(best) { k } else { best });
        if spread(dim) <= 0.0 {
            return KdNode::Leaf(idx);
        }
        idx.sort_by(|&a, &b| x[a][dim].total_cmp(&x[b][dim]).then(a.cmp(&b)));
        let right = idx.split_off(idx.len() / 2);
        let value = x[right[0]][dim];
        KdNode::Split {
            dim,
            value,
            left: Box::new(KdNode::build(x, idx, leaf_size)),
            right: Box::new(KdNode::build(x, right, leaf_size)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub params: KnnParams,
    x: Vec<Vec<f64>>,
    y: Vec<u8>,
    tree: Option<KdNode>,
}

fn minkowski(a: &[f64], b: &[f64], p: u32) -> f64 {
    match p {
        1 => a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum(),
        2 => a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt(),
        _ => a.iter().zip(b).map(|(u, v)| (u - v).abs().powi(p as i32)).sum::<f64>().powf(1.0 / f64::from(p)),
    }
}

fn before(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn insert_candidate(best: &mut Vec<(f64, usize)>, cand: (f64, usize), k: usize) {
    if best.len() == k && !before(cand, best[k - 1]) {
        return;
    }
    let pos = best.iter().position(|&b| before(cand, b)).unwrap_or(best.len());
    best.insert(pos, cand);
    best.truncate(k);
}

impl Knn {
    pub fn fit(data: &Dataset, params: &KnnParams) -> Knn {
        let tree = match params.algorithm {
            Algorithm::KdTree if !data.is_empty() => {
                Some(KdNode::build(&data.matrix, (0..data.len()).collect(), params.leaf_size))
            }
            _ => None,
        };
        Knn { params: params.clone(), x: data.matrix.clone(), y: data.labels.clone(), tree }
    }

    /// The `k` nearest training rows as `(distance, index)`, nearest first.
    pub fn neighbors(&self, query: &[f64]) -> Vec<(f64, usize)> {
        let k = self.params.n_neighbors.min(self.x.len());
        if k == 0 {
            return Vec::new();
        }
        match &self.tree {
            None => {
                let mut all: Vec<(f64, usize)> =
                    self.x.iter().enumerate().map(|(i, r)| (minkowski(query, r, self.params.p), i)).collect();
                all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                all.truncate(k);
                all
            }
            Some(root) => {
                let mut best = Vec::with_capacity(k + 1);
                self.search(root, query, k, &mut best);
                best
            }
        }
    }

    fn search(&self, node: &KdNode, q: &[f64], k: usize, best: &mut Vec<(f64, usize)>) {
        match node {
            KdNode::Leaf(idx) => {
                for &i in idx {
                    insert_candidate(best, (minkowski(q, &self.x[i], self.params.p), i), k);
                }
            }
            KdNode::Split { dim, value, left, right } => {
                let gap = q[*dim] - value;
                let (near, far) = if gap < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, k, best);
                // axis gap bounds the distance to anything on the far side
                let bound = gap.abs() * (1.0 - 1e-12);
                if best.len() < k || bound <= best[best.len() - 1].0 {
                    self.search(far, q, k, best);
                }
            }
        }
    }

    pub fn predict_proba(&self, query: &[f64]) -> f64 {
        let nbrs = self.neighbors(query);
        if nbrs.is_empty() {
            return 0.5;
        }
        match self.params.weights {
            Weighting::Uniform => {
                nbrs.iter().filter(|(_, i)| self.y[*i] == 1).count() as f64 / nbrs.len() as f64
            }
            Weighting::Distance => {
                let exact: Vec<usize> = nbrs.iter().filter(|(d, _)| *d == 0.0).map(|(_, i)| *i).collect();
                if !exact.is_empty() {
                    return exact.iter().filter(|&&i| self.y[i] == 1).count() as f64 / exact.len() as f64;
                }
                let (num, den) = nbrs.iter().fold((0.0, 0.0), |(num, den), (d, i)| {
                    let w = 1.0 / d;
                    (num + w * f64::from(self.y[*i]), den + w)
                });
                num / den
            }
        }
    }
}
