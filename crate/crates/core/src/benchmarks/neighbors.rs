//! Exact k-nearest-neighbor search, local outlier factor and natural
//! neighbors.

use crate::depth::PointSet;
use crate::{Error, Result};

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Diagonal of the bounding box, or 1 for a set of identical points.
pub(crate) fn data_scale(points: &PointSet) -> f64 {
    let dim = points.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for row in points.rows() {
        for j in 0..dim {
            lo[j] = lo[j].min(row[j]);
            hi[j] = hi[j].max(row[j]);
        }
    }
    let d = lo.iter().zip(&hi).map(|(l, h)| (h - l).powi(2)).sum::<f64>().sqrt();
    if d > 0.0 {
        d
    } else {
        1.0
    }
}

/// The `k` nearest rows to `query` as `(distance, row)`, nearest first, ties
/// broken by row index. `skip` excludes one row (a point's own entry).
pub(crate) fn knn(points: &PointSet, query: &[f64], k: usize, skip: Option<usize>) -> Vec<(f64, usize)> {
    let mut all: Vec<(f64, usize)> = points
        .rows()
        .enumerate()
        .filter(|&(i, _)| Some(i) != skip)
        .map(|(i, row)| (distance(query, row), i))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < all.len() {
        all.select_nth_unstable_by(k, cmp);
        all.truncate(k);
    }
    all.sort_unstable_by(cmp);
    all
}

/// Reference neighborhoods of size `k` with k-distances and local
/// reachability densities.
///
/// Neighborhoods hold exactly `k` points; equidistant candidates are ordered
/// by index. The mean reachability distance is floored at `1e-12 · scale` so
/// duplicates give a large but finite density.
#[derive(Debug, Clone)]
pub struct Lof {
    points: PointSet,
    k: usize,
    k_distance: Vec<f64>,
    lrd: Vec<f64>,
    floor: f64,
}

impl Lof {
    pub fn fit(points: &PointSet, k: usize) -> Result<Self> {
        let n = points.len();
        if k == 0 || k >= n {
            return Err(Error::InvalidParameter(format!(
                "LOF needs 1 <= k < |R|, got k = {k} with |R| = {n}"
            )));
        }
        let neighborhoods: Vec<Vec<(f64, usize)>> = (0..n).map(|i| knn(points, points.row(i), k, Some(i))).collect();
        let k_distance: Vec<f64> = neighborhoods.iter().map(|nb| nb[k - 1].0).collect();
        let floor = 1e-12 * data_scale(points);
        let lrd = neighborhoods
            .iter()
            .map(|nb| reach_density(nb, &k_distance, floor))
            .collect();
        Ok(Self {
            points: points.clone(),
            k,
            k_distance,
            lrd,
            floor,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Local outlier factor of a point outside the reference set. A query
    /// equal to a reference point keeps that point in its neighborhood.
    pub fn score(&self, query: &[f64]) -> f64 {
        let nb = knn(&self.points, query, self.k, None);
        let own = reach_density(&nb, &self.k_distance, self.floor);
        let mean_lrd = nb.iter().map(|&(_, o)| self.lrd[o]).sum::<f64>() / nb.len() as f64;
        mean_lrd / own
    }
}

fn reach_density(neighborhood: &[(f64, usize)], k_distance: &[f64], floor: f64) -> f64 {
    let mean_reach = neighborhood.iter().map(|&(d, o)| d.max(k_distance[o])).sum::<f64>() / neighborhood.len() as f64;
    1.0 / mean_reach.max(floor)
}

/// Outcome of the natural-neighbor search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NaturalNeighbors {
    /// Smallest `k` at which every point is some other point's k-neighbor.
    pub lambda: usize,
    /// Whether the search ran to the cap `|R| - 1`.
    pub capped: bool,
}

/// Grows `k` from 1 until every reference point has at least one reverse
/// k-nearest neighbor, or `k` reaches `|R| - 1`.
pub fn natural_neighbors(points: &PointSet) -> Result<NaturalNeighbors> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "natural neighbors need |R| >= 3, got {n}"
        )));
    }
    let cap = n - 1;
    let order: Vec<Vec<(f64, usize)>> = (0..n).map(|i| knn(points, points.row(i), cap, Some(i))).collect();
    let mut reverse = vec![0usize; n];
    let mut orphans = n;
    for k in 1..=cap {
        for nb in &order {
            let o = nb[k - 1].1;
            if reverse[o] == 0 {
                orphans -= 1;
            }
            reverse[o] += 1;
        }
        if orphans == 0 || k == cap {
            return Ok(NaturalNeighbors {
                lambda: k,
                capped: k == cap,
            });
        }
    }
    unreachable!("the loop returns at k = cap")
}
