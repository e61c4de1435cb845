//! Bagged CART classifier: Gini splits, a random feature subset per node,
//! majority vote across trees.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FsError;
use crate::base::{mix_seed, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { n_trees: 50, max_depth: 12, min_samples_split: 2, bootstrap: true }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<(), FsError> {
        if self.n_trees == 0 {
            return Err(FsError::Config("n_trees must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(FsError::Config("min_samples_split must be at least 2".into()));
        }
        Ok(())
    }
}

/// Features examined per split: `max(1, floor(sqrt(m)))`.
pub fn features_per_split(m: usize) -> usize {
    ((m as f64).sqrt().floor() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(usize),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(c) => return c,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Lowest class index among those with the highest count.
pub(crate) fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Gini impurity of `parent − left`.
fn gini_rest(parent: &[usize], left: &[usize]) -> f64 {
    let n: usize = parent.iter().zip(left).map(|(p, l)| p - l).sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - parent.iter().zip(left).map(|(p, l)| ((p - l) as f64 / n).powi(2)).sum::<f64>()
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    features: &'a [usize],
    n_classes: usize,
    params: &'a ForestParams,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn class_counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &i in idx {
            counts[self.y[i]] += 1;
        }
        counts
    }

    /// Best (weighted impurity, threshold) over one feature, if any split
    /// separates two distinct values.
    fn best_threshold(&self, idx: &mut [usize], feature: usize, parent: &[usize]) -> Option<(f64, f64)> {
        idx.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
        let n = idx.len();
        let mut left = vec![0usize; self.n_classes];
        let mut best: Option<(f64, f64)> = None;
        for k in 1..n {
            left[self.y[idx[k - 1]]] += 1;
            let (lo, hi) = (self.x[idx[k - 1]][feature], self.x[idx[k]][feature]);
            if lo == hi {
                continue;
            }
            let score = (k as f64 * gini(&left) + (n - k) as f64 * gini_rest(parent, &left)) / n as f64;
            if best.is_none_or(|(s, _)| score < s) {
                let mid = lo + (hi - lo) / 2.0;
                // The midpoint can round up to `hi` for adjacent floats.
                best = Some((score, if mid < hi { mid } else { lo }));
            }
        }
        best
    }

    fn build(&mut self, idx: &mut [usize], depth: usize, rng: &mut SeededRng) -> usize {
        let counts = self.class_counts(idx);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf(majority(&counts)));
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.params.max_depth || idx.len() < self.params.min_samples_split {
            return at;
        }

        // Draw features in random order; keep drawing past the quota while
        // no examined feature admits a split.
        let quota = features_per_split(self.features.len());
        let mut order = self.features.to_vec();
        order.shuffle(rng);
        let mut best: Option<(f64, usize, f64)> = None;
        for (examined, &f) in order.iter().enumerate() {
            if examined >= quota && best.is_some() {
                break;
            }
            if let Some((score, thr)) = self.best_threshold(idx, f, &counts) {
                if best.is_none_or(|(s, _, _)| score < s) {
                    best = Some((score, f, thr));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return at;
        };

        idx.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
        let cut = idx.partition_point(|&i| self.x[i][feature] <= threshold);
        let (l, r) = idx.split_at_mut(cut);
        let left = self.build(l, depth + 1, rng);
        let right = self.build(r, depth + 1, rng);
        self.nodes[at] = Node::Split { feature, threshold, left, right };
        at
    }
}

/// Fits one tree on the rows `sample` using only `features`.
pub fn fit_tree(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    features: &[usize],
    sample: &mut [usize],
    params: &ForestParams,
    rng: &mut SeededRng,
) -> Tree {
    let mut b = Builder { x, y, features, n_classes, params, nodes: Vec::new() };
    b.build(sample, 0, rng);
    Tree { nodes: b.nodes }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
    n_classes: usize,
}

impl Forest {
    /// Tree `t` draws from the stream `mix_seed(seed, [t])`, so the result
    /// does not depend on how trees are scheduled across threads.
    pub fn fit(
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        features: &[usize],
        params: &ForestParams,
        seed: u64,
    ) -> Forest {
        assert!(!x.is_empty() && x.len() == y.len(), "training rows and labels must match and be non-empty");
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = SeededRng::new(mix_seed(seed, &[t as u64]));
                let n = x.len();
                let mut sample: Vec<usize> =
                    if params.bootstrap { (0..n).map(|_| rng.random_range(0..n)).collect() } else { (0..n).collect() };
                fit_tree(x, y, n_classes, features, &mut sample, params, &mut rng)
            })
            .collect();
        Forest { trees, n_classes }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        let mut votes = vec![0; self.n_classes];
        for t in &self.trees {
            votes[t.predict(row)] += 1;
        }
        majority(&votes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_by_hand() {
        assert_eq!(gini(&[5, 0]), 0.0);
        assert_eq!(gini(&[2, 2]), 0.5);
        assert!((gini(&[1, 2]) - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn sqrt_rule() {
        assert_eq!(features_per_split(1), 1);
        assert_eq!(features_per_split(3), 1);
        assert_eq!(features_per_split(4), 2);
        assert_eq!(features_per_split(10), 3);
    }

    #[test]
    fn stump_finds_the_gap() {
        let x: Vec<Vec<f64>> = [0.1, 0.2, 0.3, 0.7, 0.8, 0.9].iter().map(|&v| vec![v]).collect();
        let y = [0, 0, 0, 1, 1, 1];
        let params = ForestParams { n_trees: 1, bootstrap: false, ..ForestParams::default() };
        let f = Forest::fit(&x, &y, 2, &[0], &params, 3);
        assert_eq!(f.trees()[0].depth(), 1);
        assert_eq!(f.trees()[0].nodes[0], Node::Split { feature: 0, threshold: 0.5, left: 1, right: 2 });
        assert_eq!(f.predict(&[0.49]), 0);
        assert_eq!(f.predict(&[0.51]), 1);
    }

    #[test]
    fn depth_cap_and_constant_features() {
        let x: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64, 1.0]).collect();
        let y: Vec<usize> = (0..64).map(|i| i % 2).collect();
        let params = ForestParams { n_trees: 1, max_depth: 3, bootstrap: false, ..ForestParams::default() };
        let f = Forest::fit(&x, &y, 2, &[0, 1], &params, 0);
        assert!(f.trees()[0].depth() <= 3);
        let constant = Forest::fit(&x, &y, 2, &[1], &params, 0);
        assert_eq!(constant.trees()[0].depth(), 0);
    }

    #[test]
    fn majority_ties_go_low() {
        assert_eq!(majority(&[2, 2, 1]), 0);
        assert_eq!(majority(&[1, 3, 3]), 1);
    }
}
