//! Isolation forest.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::depth::PointSet;
use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Average path length of an unsuccessful binary-search-tree lookup among
/// `n` points.
pub fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let m = (n - 1) as f64;
            2.0 * (m.ln() + EULER_GAMMA) - 2.0 * m / n as f64
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        size: usize,
    },
    Split {
        feature: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn grow(points: &PointSet, rows: Vec<usize>, height_limit: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut tree = Self { nodes: Vec::new() };
        tree.build(points, rows, 0, height_limit, rng);
        tree
    }

    fn build(
        &mut self,
        points: &PointSet,
        rows: Vec<usize>,
        depth: usize,
        limit: usize,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { size: rows.len() });
        if depth >= limit || rows.len() <= 1 {
            return id;
        }
        // features on which the node's points still differ
        let spans: Vec<(usize, f64, f64)> = (0..points.dim())
            .filter_map(|j| {
                let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                    let v = points.row(r)[j];
                    (lo.min(v), hi.max(v))
                });
                (hi > lo).then_some((j, lo, hi))
            })
            .collect();
        if spans.is_empty() {
            return id;
        }
        let (feature, lo, hi) = spans[rng.random_range(0..spans.len())];
        let value = rng.random_range(lo..hi);
        let (l, r): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&i| points.row(i)[feature] < value);
        let left = self.build(points, l, depth + 1, limit, rng);
        let right = self.build(points, r, depth + 1, limit, rng);
        self.nodes[id] = Node::Split {
            feature,
            value,
            left,
            right,
        };
        id
    }

    fn path_length(&self, x: &[f64]) -> f64 {
        let mut node = 0;
        let mut depth = 0.0;
        loop {
            match self.nodes[node] {
                Node::Leaf { size } => return depth + average_path_length(size),
                Node::Split {
                    feature,
                    value,
                    left,
                    right,
                } => {
                    node = if x[feature] < value { left } else { right };
                    depth += 1.0;
                }
            }
        }
    }
}

/// Ensemble of isolation trees, each grown on a subsample drawn without
/// replacement and limited to height `ceil(log2 ψ)`.
#[derive(Debug, Clone)]
pub struct IsolationForest {
    trees: Vec<Tree>,
    subsample: usize,
}

impl IsolationForest {
    pub fn fit(points: &PointSet, trees: usize, subsample: usize, seed: u64) -> Result<Self> {
        let n = points.len();
        if trees == 0 || subsample < 2 || subsample > n {
            return Err(Error::InvalidParameter(format!(
                "isolation forest needs trees >= 1 and 2 <= subsample <= |R|, got {trees} trees, subsample {subsample}, |R| = {n}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let limit = (subsample as f64).log2().ceil() as usize;
        let trees = (0..trees)
            .map(|_| {
                let rows = sample(&mut rng, n, subsample).into_vec();
                Tree::grow(points, rows, limit, &mut rng)
            })
            .collect();
        Ok(Self { trees, subsample })
    }

    /// Anomaly score `2^(-E[h(x)] / c(ψ))`.
    pub fn score(&self, x: &[f64]) -> f64 {
        let mean = self.trees.iter().map(|t| t.path_length(x)).sum::<f64>() / self.trees.len() as f64;
        2f64.powf(-mean / average_path_length(self.subsample))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_length_normalizer() {
        assert_eq!(average_path_length(2), 1.0);
        let h255: f64 = (1..=255).map(|i| 1.0 / i as f64).sum();
        let exact = 2.0 * h255 - 2.0 * 255.0 / 256.0;
        assert!((average_path_length(256) - exact).abs() < 0.01);
    }

    #[test]
    fn degenerate_forest_is_well_defined() {
        let p = PointSet::new(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 0.5]]).unwrap();
        let f = IsolationForest::fit(&p, 1, 2, 7).unwrap();
        for q in [[0.0, 0.0], [10.0, -3.0], [1.0, 1.0]] {
            let s = f.score(&q);
            assert!(s > 0.0 && s < 1.0, "{s}");
        }
    }
}
