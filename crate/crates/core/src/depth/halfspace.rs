//! Direction-sampled Tukey depth with add-one smoothing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::points::{dot, PointSet};
use super::sphere::Direction;

/// Reference projections onto a fixed set of random directions, each sorted.
pub(super) struct ProjectionTable {
    dim: usize,
    n: usize,
    directions: Vec<f64>,
    sorted: Vec<f64>,
}

impl ProjectionTable {
    /// Directions are drawn in sequence from `seed`, so a larger budget
    /// extends the same direction set.
    pub(super) fn new(points: &PointSet, budget: usize, seed: u64) -> Self {
        let (dim, n) = (points.dim(), points.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut directions = Vec::with_capacity(budget * dim);
        let mut sorted = Vec::with_capacity(budget * n);
        let mut proj = Vec::with_capacity(n);
        for _ in 0..budget {
            let p = Direction::random(dim, &mut rng);
            points.project_into(p.as_slice(), &mut proj);
            proj.sort_by(f64::total_cmp);
            sorted.extend_from_slice(&proj);
            directions.extend_from_slice(p.as_slice());
        }
        Self {
            dim,
            n,
            directions,
            sorted,
        }
    }

    /// `min_p (#{⟨p, m⟩ ≥ ⟨p, q⟩} + 1) / (n + 2)`.
    pub(super) fn depth(&self, query: &[f64]) -> f64 {
        let mut min_count = self.n;
        for (p, proj) in self
            .directions
            .chunks_exact(self.dim)
            .zip(self.sorted.chunks_exact(self.n))
        {
            let x = dot(query, p);
            let below = proj.partition_point(|&v| v < x);
            min_count = min_count.min(self.n - below);
            if min_count == 0 {
                break;
            }
        }
        (min_count + 1) as f64 / (self.n + 2) as f64
    }
}
