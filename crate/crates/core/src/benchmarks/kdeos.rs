//! Kernel density estimation outlier score over a range of neighborhood
//! sizes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::neighbors::{data_scale, knn};
use crate::depth::PointSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Gaussian,
    Epanechnikov,
}

impl Kernel {
    /// Kernel weight at distance `d` with bandwidth `h` in `dim` dimensions.
    /// Normalizing constants that do not depend on `h` are dropped; they
    /// cancel in the z-score.
    fn weight(self, d: f64, h: f64, dim: usize) -> f64 {
        let u = d / h;
        let shape = match self {
            Kernel::Gaussian => (-0.5 * u * u).exp() / (2.0 * PI).sqrt(),
            Kernel::Epanechnikov => 0.75 * (1.0 - u * u).max(0.0),
        };
        shape / h.powi(dim as i32)
    }
}

/// Fitted KDEOS model.
///
/// For each neighborhood size `k`, the density at a point is the mean kernel
/// weight of its `k` nearest reference points with bandwidth equal to the
/// distance to the k-th of them. The query's density is z-scored against the
/// densities of its own `k` neighbors; the score is the negated mean z-score
/// over `k_min..=k_max`.
#[derive(Debug, Clone)]
pub struct Kdeos {
    points: PointSet,
    kernel: Kernel,
    k_min: usize,
    k_max: usize,
    /// `densities[i][k - k_min]` for reference point `i`.
    densities: Vec<Vec<f64>>,
    floor: f64,
}

impl Kdeos {
    pub fn fit(points: &PointSet, kernel: Kernel, k_min: usize, k_max: usize) -> Result<Self> {
        let n = points.len();
        if k_min == 0 || k_min > k_max || k_max >= n {
            return Err(Error::InvalidParameter(format!(
                "KDEOS needs 1 <= k_min <= k_max < |R|, got {k_min}..{k_max} with |R| = {n}"
            )));
        }
        let floor = 1e-12 * data_scale(points);
        let mut model = Self {
            points: points.clone(),
            kernel,
            k_min,
            k_max,
            densities: Vec::new(),
            floor,
        };
        model.densities = (0..n)
            .map(|i| {
                let nb = knn(points, points.row(i), k_max, Some(i));
                model.densities_from(&nb)
            })
            .collect();
        Ok(model)
    }

    fn densities_from(&self, nb: &[(f64, usize)]) -> Vec<f64> {
        let dim = self.points.dim();
        (self.k_min..=self.k_max)
            .map(|k| {
                let h = nb[k - 1].0.max(self.floor);
                nb[..k].iter().map(|&(d, _)| self.kernel.weight(d, h, dim)).sum::<f64>() / k as f64
            })
            .collect()
    }

    pub fn score(&self, query: &[f64]) -> f64 {
        let nb = knn(&self.points, query, self.k_max, None);
        let own = self.densities_from(&nb);
        let mut total = 0.0;
        for (j, k) in (self.k_min..=self.k_max).enumerate() {
            let local: Vec<f64> = nb[..k].iter().map(|&(_, o)| self.densities[o][j]).collect();
            let mean = local.iter().sum::<f64>() / k as f64;
            let var = local.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / k as f64;
            let sd = var.sqrt().max(1e-12 * mean.abs()).max(f64::MIN_POSITIVE);
            total += (own[j] - mean) / sd;
        }
        -total / (self.k_max - self.k_min + 1) as f64
    }
}
