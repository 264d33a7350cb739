//! Out-of-control samples from a beta distribution whose parameters are the
//! ratio of two per-class beta fits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Method-of-moments beta fit of values in [0, 1]: with sample mean `m` and
/// variance `v`, `α = m c` and `β = (1 - m) c` where `c = m (1 - m) / v - 1`.
pub fn fit_beta_moments(values: &[f64]) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidParameter("a beta fit needs at least two values".into()));
    }
    if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidParameter("beta fits need values in [0, 1]".into()));
    }
    if values.iter().all(|&v| v == values[0]) {
        return Err(Error::ZeroVariance("all values are equal".into()));
    }
    let m = values.iter().sum::<f64>() / n as f64;
    let v = values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    let c = m * (1.0 - m) / v - 1.0;
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "variance {v} too large for a beta distribution with mean {m}"
        )));
    }
    Ok((m * c, (1.0 - m) * c))
}

/// Sampler for `Beta(α₁/α₂, β₁/β₂)` vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaRatioSampler {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaRatioSampler {
    pub fn from_fits(first: (f64, f64), second: (f64, f64)) -> Result<Self> {
        let (alpha, beta) = (first.0 / second.0, first.1 / second.1);
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid beta ratio ({alpha}, {beta})")));
        }
        Ok(Self { alpha, beta })
    }

    /// `count` vectors of length `dim`, deterministic given `seed`.
    pub fn sample(&self, count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let dist = Beta::new(self.alpha, self.beta).expect("parameters validated at construction");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| (0..dim).map(|_| dist.sample(&mut rng)).collect())
            .collect()
    }
}

/// Fits each class's flattened values and forms the ratio sampler.
pub fn beta_ratio_ooc(first: &[f64], second: &[f64]) -> Result<BetaRatioSampler> {
    BetaRatioSampler::from_fits(fit_beta_moments(first)?, fit_beta_moments(second)?)
}
