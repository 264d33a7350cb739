//! Comparison outlyingness scores routed through the same rank charts as the
//! depth functions.
//!
//! Each scorer is fitted on a reference sample and oriented so that larger
//! centrality means "more typical"; outlyingness scores are negated. The
//! in-sample centralities of the reference points are computed with the same
//! query path used in monitoring, so a reference point replayed as a query
//! gets exactly its in-sample rank.

mod iforest;
mod kdeos;
mod neighbors;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use iforest::{average_path_length, IsolationForest};
pub use kdeos::{Kdeos, Kernel};
pub use neighbors::{natural_neighbors, Lof, NaturalNeighbors};

use crate::charting::{CentralityModel, Feature};
use crate::depth::PointSet;
use crate::{Error, Result};

pub const DEFAULT_LOF_K: usize = 20;
pub const DEFAULT_KDEOS_K_MIN: usize = 5;
pub const DEFAULT_KDEOS_K_MAX: usize = 20;
pub const DEFAULT_TREES: usize = 100;
pub const DEFAULT_SUBSAMPLE_CAP: usize = 256;
pub const DEFAULT_FOREST_SEED: u64 = 0x1f0e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    HigherIsCentral,
    HigherIsOutlying,
}

/// Maps a score to centrality: identity or negation.
pub fn score_to_centrality(orientation: Orientation, score: f64) -> f64 {
    match orientation {
        Orientation::HigherIsCentral => score,
        Orientation::HigherIsOutlying => -score,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum BenchmarkMethod {
    Lof {
        k: usize,
    },
    Kdeos {
        kernel: Kernel,
        k_min: usize,
        k_max: usize,
    },
    #[serde(rename = "iforest")]
    IForest {
        trees: usize,
        /// `None` means `min(256, |R|)`.
        subsample: Option<usize>,
        seed: u64,
    },
    #[serde(rename = "mdis")]
    MDis,
    Nof,
}

impl BenchmarkMethod {
    pub fn lof() -> Self {
        Self::Lof { k: DEFAULT_LOF_K }
    }

    pub fn kdeos() -> Self {
        Self::Kdeos {
            kernel: Kernel::Gaussian,
            k_min: DEFAULT_KDEOS_K_MIN,
            k_max: DEFAULT_KDEOS_K_MAX,
        }
    }

    pub fn iforest() -> Self {
        Self::IForest {
            trees: DEFAULT_TREES,
            subsample: None,
            seed: DEFAULT_FOREST_SEED,
        }
    }

    pub fn all() -> Vec<Self> {
        vec![Self::lof(), Self::kdeos(), Self::iforest(), Self::MDis, Self::Nof]
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Lof { .. } => "LOF",
            Self::Kdeos { .. } => "KDEOS",
            Self::IForest { .. } => "iForest",
            Self::MDis => "MDis",
            Self::Nof => "NOF",
        }
    }

    pub fn orientation(&self) -> Orientation {
        Orientation::HigherIsOutlying
    }

    /// MDis and NOF score the softmax confidence; the others the embedding.
    pub fn feature(&self) -> Feature {
        match self {
            Self::MDis | Self::Nof => Feature::Confidence,
            _ => Feature::Embedding,
        }
    }
}

impl fmt::Display for BenchmarkMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BenchmarkMethod {
    type Err = Error;

    /// Parses a method label into its default parameters.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lof" => Ok(Self::lof()),
            "kdeos" => Ok(Self::kdeos()),
            "iforest" => Ok(Self::iforest()),
            "mdis" => Ok(Self::MDis),
            "nof" => Ok(Self::Nof),
            _ => Err(Error::InvalidParameter(format!("unknown benchmark method '{s}'"))),
        }
    }
}

/// Univariate squared Mahalanobis distance with the sample variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MDis {
    pub mean: f64,
    pub variance: f64,
}

impl MDis {
    pub fn fit(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InvalidParameter(
                "MDis needs at least two reference values".into(),
            ));
        }
        if values.iter().all(|&v| v == values[0]) {
            return Err(Error::ZeroVariance("MDis reference values are constant".into()));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        if !(variance > 0.0) {
            return Err(Error::ZeroVariance("MDis reference values are constant".into()));
        }
        Ok(Self { mean, variance })
    }

    pub fn score(&self, x: f64) -> f64 {
        (x - self.mean).powi(2) / self.variance
    }
}

#[derive(Debug, Clone)]
enum Fitted {
    Lof(Lof),
    Kdeos(Kdeos),
    IForest(IsolationForest),
    MDis(MDis),
    Nof(Lof),
}

/// A benchmark method fitted to one reference sample.
#[derive(Debug, Clone)]
pub struct CentralityScorer {
    method: BenchmarkMethod,
    dim: usize,
    fitted: Fitted,
    natural: Option<NaturalNeighbors>,
    reference_centrality: Vec<f64>,
    source_indices: Vec<usize>,
}

impl CentralityScorer {
    /// Fits `method` on `points`. `source_indices` are the stream indices of
    /// the rows, reported in Phase I output.
    pub fn fit(method: BenchmarkMethod, points: &PointSet, source_indices: Vec<usize>) -> Result<Self> {
        if source_indices.len() != points.len() {
            return Err(Error::InvalidParameter(
                "one source index per reference row is required".into(),
            ));
        }
        let mut natural = None;
        let fitted = match method {
            BenchmarkMethod::Lof { k } => Fitted::Lof(Lof::fit(points, k)?),
            BenchmarkMethod::Kdeos { kernel, k_min, k_max } => Fitted::Kdeos(Kdeos::fit(points, kernel, k_min, k_max)?),
            BenchmarkMethod::IForest { trees, subsample, seed } => {
                let psi = subsample.unwrap_or(DEFAULT_SUBSAMPLE_CAP.min(points.len()));
                Fitted::IForest(IsolationForest::fit(points, trees, psi, seed)?)
            }
            BenchmarkMethod::MDis => {
                if points.dim() != 1 {
                    return Err(Error::DimensionMismatch {
                        expected: 1,
                        got: points.dim(),
                    });
                }
                let values: Vec<f64> = points.rows().map(|r| r[0]).collect();
                Fitted::MDis(MDis::fit(&values)?)
            }
            BenchmarkMethod::Nof => {
                let nn = natural_neighbors(points)?;
                natural = Some(nn);
                Fitted::Nof(Lof::fit(points, nn.lambda)?)
            }
        };
        let mut scorer = Self {
            method,
            dim: points.dim(),
            fitted,
            natural,
            reference_centrality: Vec::new(),
            source_indices,
        };
        let rows: Vec<&[f64]> = points.rows().collect();
        scorer.reference_centrality = rows.par_iter().map(|row| scorer.centrality_unchecked(row)).collect();
        Ok(scorer)
    }

    pub fn method(&self) -> &BenchmarkMethod {
        &self.method
    }

    pub fn orientation(&self) -> Orientation {
        self.method.orientation()
    }

    /// Natural-neighbor search outcome, for NOF.
    pub fn natural_neighbors(&self) -> Option<NaturalNeighbors> {
        self.natural
    }

    fn raw_unchecked(&self, x: &[f64]) -> f64 {
        match &self.fitted {
            Fitted::Lof(m) | Fitted::Nof(m) => m.score(x),
            Fitted::Kdeos(m) => m.score(x),
            Fitted::IForest(m) => m.score(x),
            Fitted::MDis(m) => m.score(x[0]),
        }
    }

    fn centrality_unchecked(&self, x: &[f64]) -> f64 {
        score_to_centrality(self.orientation(), self.raw_unchecked(x))
    }

    /// The method's own score, in its native orientation.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("query".into()));
        }
        Ok(self.raw_unchecked(x))
    }
}

impl CentralityModel for CentralityScorer {
    fn centrality(&self, query: &[f64]) -> Result<f64> {
        self.score(query).map(|s| score_to_centrality(self.orientation(), s))
    }

    fn reference_centrality(&self) -> &[f64] {
        &self.reference_centrality
    }

    fn reference_indices(&self) -> &[usize] {
        &self.source_indices
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charting::r_statistic;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orientation_mapping() {
        assert_eq!(score_to_centrality(Orientation::HigherIsOutlying, 2.0), -2.0);
        assert_eq!(score_to_centrality(Orientation::HigherIsCentral, 0.7), 0.7);
    }

    #[test]
    fn negated_ranks_match_strict_outlier_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            // coarse values force ties
            let scores: Vec<f64> = (0..20).map(|_| rng.random_range(0..8) as f64).collect();
            let cent: Vec<f64> = scores
                .iter()
                .map(|&s| score_to_centrality(Orientation::HigherIsOutlying, s))
                .collect();
            for &q in &[-1.0, 0.0, 3.0, 3.5, 7.0, 9.0] {
                let strictly_below = scores.iter().filter(|&&s| s < q).count();
                let expected = (20 - strictly_below) as f64 / 20.0;
                let r = r_statistic(score_to_centrality(Orientation::HigherIsOutlying, q), &cent);
                assert_eq!(r, expected);
            }
        }
    }

    #[test]
    fn mdis_hand_values() {
        let m = MDis::fit(&[0.0, 1.0]).unwrap();
        assert_eq!(m.score(0.5), 0.0);
        assert_eq!(m.score(1.5), 2.0);
        assert_eq!(m.score(0.5 + 0.25), m.score(0.5 - 0.25));
        assert!(matches!(MDis::fit(&[0.4, 0.4, 0.4]), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn labels_round_trip() {
        for m in BenchmarkMethod::all() {
            assert_eq!(m.label().parse::<BenchmarkMethod>().unwrap(), m);
        }
        assert!("svm".parse::<BenchmarkMethod>().is_err());
    }

    #[test]
    fn in_sample_matches_query_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let p = PointSet::new(&rows).unwrap();
        for m in [
            BenchmarkMethod::lof(),
            BenchmarkMethod::kdeos(),
            BenchmarkMethod::iforest(),
            BenchmarkMethod::Nof,
        ] {
            let s = CentralityScorer::fit(m, &p, (0..60).collect()).unwrap();
            for (i, row) in rows.iter().enumerate() {
                assert_eq!(s.centrality(row).unwrap(), s.reference_centrality()[i]);
            }
            assert!(s.score(&[0.0]).is_err());
        }
    }
}
