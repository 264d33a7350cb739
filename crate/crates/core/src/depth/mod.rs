//! Data depth of a query vector with respect to a reference sample.
//!
//! Four notions are provided:
//!
//! - **Mahalanobis**: `1 / (1 + (q − μ)ᵀ Σ⁻¹ (q − μ))` from the cached sample
//!   mean and inverse covariance.
//! - **Simplicial**: fraction of the `C(|R|, k+1)` open simplices spanned by
//!   reference points that contain the query, by exact enumeration (`k ≤ 3`).
//! - **Robust Halfspace**: Tukey depth over a sampled direction set with
//!   add-one rank smoothing, `(#{⟨p, m⟩ ≥ ⟨p, q⟩} + 1) / (|R| + 2)`, so it
//!   stays positive and varies outside the convex hull.
//! - **Projection**: `1 / (1 + O)` with `O` the largest standardized
//!   deviation of the projected query over unit directions, approximated by
//!   one of three sphere optimizers. The asymmetric variant measures upward
//!   deviations only, scaled by the median of the positive deviations.
//!
//! Randomized notions seed their generators from [`DepthSpec::rng_seed`]
//! alone, so a depth is a pure function of `(query, reference, spec)` and
//! in-sample caches agree bit-for-bit with later queries at the same point.

mod halfspace;
mod points;
mod projection;
mod simplicial;
mod sphere;
mod stats;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use points::{CovarianceMode, DepthCache, PointSet, ReferenceSet};
pub use projection::outlyingness;
pub use sphere::{sphere_optimize, Direction, SearchParams};
pub use stats::univariate_med_mad;

use crate::{Error, Result};

pub const DEFAULT_RESTARTS: usize = 10;
pub const DEFAULT_MAX_ITERATIONS: usize = 100;
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-6;
pub const DEFAULT_HALFSPACE_DIRECTIONS: usize = 1000;
pub const DEFAULT_RANDOM_SEARCH_EVALUATIONS: usize = 5000;
pub const DEFAULT_DEPTH_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionVariant {
    Symmetric,
    Asymmetric,
}

/// Search strategy over the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereOptimizer {
    CoordinateDescent,
    NelderMead,
    RefinedRandomSearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthNotion {
    Mahalanobis,
    Simplicial,
    HalfspaceRobust,
    Projection {
        variant: ProjectionVariant,
        optimizer: SphereOptimizer,
    },
}

/// A depth notion plus the budget of its approximation algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthSpec {
    pub notion: DepthNotion,
    pub direction_budget: usize,
    pub restarts: usize,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub rng_seed: u64,
}

impl DepthSpec {
    fn with_notion(notion: DepthNotion, direction_budget: usize) -> Self {
        Self {
            notion,
            direction_budget,
            restarts: DEFAULT_RESTARTS,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
            rng_seed: DEFAULT_DEPTH_SEED,
        }
    }

    pub fn mahalanobis() -> Self {
        Self::with_notion(DepthNotion::Mahalanobis, DEFAULT_HALFSPACE_DIRECTIONS)
    }

    pub fn simplicial() -> Self {
        Self::with_notion(DepthNotion::Simplicial, DEFAULT_HALFSPACE_DIRECTIONS)
    }

    pub fn halfspace_robust() -> Self {
        Self::with_notion(DepthNotion::HalfspaceRobust, DEFAULT_HALFSPACE_DIRECTIONS)
    }

    pub fn projection(variant: ProjectionVariant, optimizer: SphereOptimizer) -> Self {
        let budget = match optimizer {
            SphereOptimizer::RefinedRandomSearch => DEFAULT_RANDOM_SEARCH_EVALUATIONS,
            _ => DEFAULT_HALFSPACE_DIRECTIONS,
        };
        Self::with_notion(DepthNotion::Projection { variant, optimizer }, budget)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_direction_budget(mut self, budget: usize) -> Self {
        self.direction_budget = budget;
        self
    }

    /// Every notion under its short label: MD, SD, HDr, PDa1..3, PD1..3.
    pub fn all() -> Vec<Self> {
        ["MD", "SD", "HDr", "PDa1", "PDa2", "PDa3", "PD1", "PD2", "PD3"]
            .iter()
            .map(|l| l.parse().expect("built-in label"))
            .collect()
    }

    pub fn label(&self) -> String {
        match self.notion {
            DepthNotion::Mahalanobis => "MD".into(),
            DepthNotion::Simplicial => "SD".into(),
            DepthNotion::HalfspaceRobust => "HDr".into(),
            DepthNotion::Projection { variant, optimizer } => {
                let v = match variant {
                    ProjectionVariant::Symmetric => "",
                    ProjectionVariant::Asymmetric => "a",
                };
                let o = match optimizer {
                    SphereOptimizer::CoordinateDescent => 1,
                    SphereOptimizer::NelderMead => 2,
                    SphereOptimizer::RefinedRandomSearch => 3,
                };
                format!("PD{v}{o}")
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.direction_budget == 0 {
            return Err(Error::InvalidParameter("direction_budget must be at least 1".into()));
        }
        if self.restarts == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "restarts and max_iterations must be at least 1".into(),
            ));
        }
        if !(self.convergence_tol > 0.0 && self.convergence_tol.is_finite()) {
            return Err(Error::InvalidParameter("convergence_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn search_params(&self) -> SearchParams {
        SearchParams {
            restarts: self.restarts,
            max_iterations: self.max_iterations,
            convergence_tol: self.convergence_tol,
            evaluation_budget: self.direction_budget,
        }
    }
}

impl fmt::Display for DepthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for DepthSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use ProjectionVariant::*;
        use SphereOptimizer::*;
        Ok(match s {
            "MD" => Self::mahalanobis(),
            "SD" => Self::simplicial(),
            "HDr" | "HD_r" => Self::halfspace_robust(),
            "PD1" => Self::projection(Symmetric, CoordinateDescent),
            "PD2" => Self::projection(Symmetric, NelderMead),
            "PD3" => Self::projection(Symmetric, RefinedRandomSearch),
            "PDa1" => Self::projection(Asymmetric, CoordinateDescent),
            "PDa2" => Self::projection(Asymmetric, NelderMead),
            "PDa3" => Self::projection(Asymmetric, RefinedRandomSearch),
            other => return Err(Error::InvalidParameter(format!("unknown depth `{other}`"))),
        })
    }
}

enum Engine {
    Mahalanobis,
    Simplicial(simplicial::Binomials),
    Halfspace(halfspace::ProjectionTable),
    Projection {
        variant: ProjectionVariant,
        optimizer: SphereOptimizer,
    },
}

/// A depth function bound to one reference set, with any per-reference
/// precomputation done once.
pub struct DepthEvaluator<'a> {
    reference: &'a ReferenceSet,
    spec: DepthSpec,
    engine: Engine,
}

impl<'a> DepthEvaluator<'a> {
    pub fn new(reference: &'a ReferenceSet, spec: &DepthSpec) -> Result<Self> {
        spec.validate()?;
        let engine = match spec.notion {
            DepthNotion::Mahalanobis => Engine::Mahalanobis,
            DepthNotion::Simplicial => {
                let k = reference.dim();
                if k > simplicial::MAX_DIM {
                    return Err(Error::UnsupportedDimension(k));
                }
                Engine::Simplicial(simplicial::Binomials::new(reference.len(), k + 1))
            }
            DepthNotion::HalfspaceRobust => Engine::Halfspace(halfspace::ProjectionTable::new(
                reference.points(),
                spec.direction_budget,
                spec.rng_seed,
            )),
            DepthNotion::Projection { variant, optimizer } => Engine::Projection { variant, optimizer },
        };
        Ok(Self {
            reference,
            spec: *spec,
            engine,
        })
    }

    pub fn spec(&self) -> &DepthSpec {
        &self.spec
    }

    pub fn depth(&self, query: &[f64]) -> Result<f64> {
        let k = self.reference.dim();
        if query.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: query.len(),
            });
        }
        if query.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("query".into()));
        }
        match &self.engine {
            Engine::Mahalanobis => Ok(mahalanobis_depth(query, self.reference)),
            Engine::Simplicial(binom) => Ok(simplicial::depth(query, self.reference.points(), binom)),
            Engine::Halfspace(table) => Ok(table.depth(query)),
            Engine::Projection { variant, optimizer } => projection::depth(
                query,
                self.reference.points(),
                *variant,
                *optimizer,
                &self.spec.search_params(),
                self.spec.rng_seed,
            ),
        }
    }

    /// Depths of every row of `points`, evaluated in parallel.
    pub fn depths_of_rows(&self, points: &PointSet) -> Result<Vec<f64>> {
        (0..points.len())
            .into_par_iter()
            .map(|i| self.depth(points.row(i)))
            .collect()
    }
}

/// Mahalanobis depth against the reference set's cached mean and inverse
/// covariance. The query length must equal the reference dimension.
pub fn mahalanobis_depth(query: &[f64], reference: &ReferenceSet) -> f64 {
    1.0 / (1.0 + mahalanobis_sq(query, reference))
}

/// `(q − μ)ᵀ Σ⁻¹ (q − μ)`.
pub fn mahalanobis_sq(query: &[f64], reference: &ReferenceSet) -> f64 {
    let mean = reference.mean();
    let inv = reference.inv_cov();
    let k = mean.len();
    let diff: Vec<f64> = query.iter().zip(mean).map(|(q, m)| q - m).collect();
    let mut total = 0.0;
    for i in 0..k {
        let mut row = 0.0;
        for j in 0..k {
            row += inv[(i, j)] * diff[j];
        }
        total += diff[i] * row;
    }
    total.max(0.0)
}

/// Exact Simplicial depth; errors when the dimension exceeds 3.
pub fn simplicial_depth(query: &[f64], reference: &ReferenceSet) -> Result<f64> {
    DepthEvaluator::new(reference, &DepthSpec::simplicial())?.depth(query)
}

/// Robust Halfspace depth; `spec.notion` must be [`DepthNotion::HalfspaceRobust`].
pub fn halfspace_depth_robust(query: &[f64], reference: &ReferenceSet, spec: &DepthSpec) -> Result<f64> {
    if spec.notion != DepthNotion::HalfspaceRobust {
        return Err(Error::InvalidParameter(format!(
            "{} is not a halfspace spec",
            spec.label()
        )));
    }
    DepthEvaluator::new(reference, spec)?.depth(query)
}

/// Approximate Projection depth; `spec.notion` must be a projection notion.
pub fn projection_depth(query: &[f64], reference: &ReferenceSet, spec: &DepthSpec) -> Result<f64> {
    if !matches!(spec.notion, DepthNotion::Projection { .. }) {
        return Err(Error::InvalidParameter(format!(
            "{} is not a projection spec",
            spec.label()
        )));
    }
    DepthEvaluator::new(reference, spec)?.depth(query)
}

/// Depth of `query` under any notion.
pub fn depth(query: &[f64], reference: &ReferenceSet, spec: &DepthSpec) -> Result<f64> {
    DepthEvaluator::new(reference, spec)?.depth(query)
}
