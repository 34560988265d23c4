//! Weighted CART trees shared by the forest, boosting and AdaBoost learners.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    /// Binary Gini impurity; targets must be 0 or 1.
    Gini,
    SquaredError,
}

impl Criterion {
    fn impurity(self, w: f64, wy: f64, wy2: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        let mean = wy / w;
        match self {
            Criterion::Gini => 2.0 * mean * (1.0 - mean),
            Criterion::SquaredError => (wy2 / w - mean * mean).max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub criterion: Criterion,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Features drawn at random per node; `None` scans all allowed features.
    pub max_features: Option<usize>,
}

impl TreeConfig {
    pub fn stump(criterion: Criterion) -> Self {
        TreeConfig { criterion, max_depth: 1, min_samples_split: 2, min_samples_leaf: 1, max_features: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

/// A fitted tree plus the weighted impurity decrease credited to each feature.
#[derive(Debug, Clone)]
pub struct TreeFit {
    pub tree: Tree,
    pub importance: Vec<f64>,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    w: &'a [f64],
    features: &'a [usize],
    cfg: &'a TreeConfig,
    rng: &'a mut Rng,
    nodes: Vec<Node>,
    importance: Vec<f64>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
    position: usize,
    order: Vec<usize>,
}

impl Builder<'_> {
    fn totals(&self, samples: &[usize]) -> (f64, f64, f64) {
        samples.iter().fold((0.0, 0.0, 0.0), |(w, wy, wy2), &i| {
            let (wi, yi) = (self.w[i], self.y[i]);
            (w + wi, wy + wi * yi, wy2 + wi * yi * yi)
        })
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        match self.cfg.max_features {
            Some(m) if m < self.features.len() => {
                let mut picked: Vec<usize> =
                    sample(self.rng, self.features.len(), m.max(1)).into_iter().map(|i| self.features[i]).collect();
                picked.sort_unstable();
                picked
            }
            _ => self.features.to_vec(),
        }
    }

    fn best_split(&mut self, samples: &[usize], parent: (f64, f64, f64)) -> Option<BestSplit> {
        let n = samples.len();
        let min_leaf = self.cfg.min_samples_leaf.max(1);
        let (tw, twy, twy2) = parent;
        let parent_cost = tw * self.cfg.criterion.impurity(tw, twy, twy2);
        let mut best: Option<BestSplit> = None;
        for f in self.candidate_features() {
            let mut order = samples.to_vec();
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let (mut lw, mut lwy, mut lwy2) = (0.0, 0.0, 0.0);
            let mut found: Option<(f64, usize)> = None;
            for pos in 1..n {
                let prev = order[pos - 1];
                lw += self.w[prev];
                lwy += self.w[prev] * self.y[prev];
                lwy2 += self.w[prev] * self.y[prev] * self.y[prev];
                if pos < min_leaf || n - pos < min_leaf {
                    continue;
                }
                let (a, b) = (self.x[prev][f], self.x[order[pos]][f]);
                if a >= b {
                    continue;
                }
                let (rw, rwy, rwy2) = (tw - lw, twy - lwy, twy2 - lwy2);
                let child_cost = lw * self.cfg.criterion.impurity(lw, lwy, lwy2)
                    + rw * self.cfg.criterion.impurity(rw, rwy, rwy2);
                let gain = parent_cost - child_cost;
                if found.is_none_or(|(g, _)| gain > g + 1e-12) {
                    found = Some((gain, pos));
                }
            }
            if let Some((gain, pos)) = found {
                if best.as_ref().is_none_or(|b| gain > b.gain + 1e-12) {
                    let (a, b) = (self.x[order[pos - 1]][f], self.x[order[pos]][f]);
                    let mid = a + (b - a) / 2.0;
                    let threshold = if mid < b { mid } else { a };
                    best = Some(BestSplit { feature: f, threshold, gain, position: pos, order });
                }
            }
        }
        best.filter(|b| b.gain > -1e-12)
    }

    fn build(&mut self, samples: Vec<usize>, depth: usize) -> usize {
        let totals = self.totals(&samples);
        let (tw, twy, twy2) = totals;
        let value = if tw > 0.0 { twy / tw } else { 0.0 };
        let impurity = self.cfg.criterion.impurity(tw, twy, twy2);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value });

        let n = samples.len();
        if depth >= self.cfg.max_depth
            || n < self.cfg.min_samples_split.max(2)
            || n < 2 * self.cfg.min_samples_leaf.max(1)
            || impurity <= 1e-15
        {
            return id;
        }
        let Some(split) = self.best_split(&samples, totals) else {
            return id;
        };
        self.importance[split.feature] += split.gain.max(0.0);
        let right_samples = split.order[split.position..].to_vec();
        let mut left_samples = split.order;
        left_samples.truncate(split.position);
        let left = self.build(left_samples, depth + 1);
        let right = self.build(right_samples, depth + 1);
        self.nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left, right };
        id
    }
}

impl Tree {
    /// Grows a tree on `samples` (indices into `x`, repeats allowed) using
    /// only the columns in `features`.
    pub fn fit(
        x: &[Vec<f64>],
        y: &[f64],
        w: &[f64],
        samples: Vec<usize>,
        features: &[usize],
        cfg: &TreeConfig,
        rng: &mut Rng,
    ) -> TreeFit {
        let n_features = x.first().map_or(0, Vec::len);
        let mut builder =
            Builder { x, y, w, features, cfg, rng, nodes: Vec::new(), importance: vec![0.0; n_features] };
        builder.build(samples, 0);
        TreeFit { tree: Tree { nodes: builder.nodes }, importance: builder.importance }
    }

    /// Leaf value reached by `x` (class-1 fraction for Gini trees).
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    id = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}
