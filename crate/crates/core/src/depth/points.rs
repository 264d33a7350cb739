use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{DepthEvaluator, DepthSpec};
use crate::reference::RefClass;
use crate::{Error, Result};

/// Row-major matrix of finite points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "point set needs at least one non-empty row".into(),
            ));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("reference point".into()));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Inner product of every row with `direction`, written into `out`.
    pub(crate) fn project_into(&self, direction: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.rows().map(|row| dot(row, direction)));
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// How a singular sample covariance is treated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMode {
    /// Fail with [`Error::SingularCovariance`].
    #[default]
    Strict,
    /// Add `1e-8 · trace / k` to the diagonal before inverting.
    Ridge,
}

/// Smallest eigenvalue, relative to the largest, accepted as non-singular.
const SINGULAR_RATIO: f64 = 1e-12;

/// In-sample depths of a reference set, tagged with the `DepthSpec` that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthCache {
    pub spec: DepthSpec,
    pub depths: Vec<f64>,
}

/// Phase I reference sample for one class (or all classes merged) with its
/// cached mean and inverse covariance.
#[derive(Debug, Clone)]
pub struct ReferenceSet {
    class: RefClass,
    points: PointSet,
    source_indices: Vec<usize>,
    mean: Vec<f64>,
    inv_cov: DMatrix<f64>,
    depth_cache: Option<DepthCache>,
}

impl ReferenceSet {
    pub fn new(class: RefClass, rows: Vec<Vec<f64>>) -> Result<Self> {
        let indices = (0..rows.len()).collect();
        Self::with_options(class, rows, indices, CovarianceMode::Strict)
    }

    /// Builds a reference set, remembering the stream index of every row.
    pub fn with_options(
        class: RefClass,
        rows: Vec<Vec<f64>>,
        source_indices: Vec<usize>,
        mode: CovarianceMode,
    ) -> Result<Self> {
        if source_indices.len() != rows.len() {
            return Err(Error::InvalidParameter(
                "one source index is required per reference row".into(),
            ));
        }
        let points = PointSet::new(&rows)?;
        let (n, k) = (points.len(), points.dim());
        if n < k + 2 {
            return Err(Error::ReferenceTooSmall {
                got: n,
                dim: k,
                need: k + 2,
            });
        }

        let mut mean = vec![0.0; k];
        for row in points.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);

        let mut cov = DMatrix::<f64>::zeros(k, k);
        for row in points.rows() {
            for i in 0..k {
                let di = row[i] - mean[i];
                for j in 0..=i {
                    cov[(i, j)] += di * (row[j] - mean[j]);
                }
            }
        }
        for i in 0..k {
            for j in 0..=i {
                let v = cov[(i, j)] / (n - 1) as f64;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        if mode == CovarianceMode::Ridge {
            let eps = 1e-8 * cov.trace() / k as f64;
            for i in 0..k {
                cov[(i, i)] += eps;
            }
        }

        let eig = SymmetricEigen::new(cov);
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if !(max > 0.0) || min <= SINGULAR_RATIO * max {
            return Err(Error::SingularCovariance(class.to_string()));
        }
        let inv_vals = eig.eigenvalues.map(|l| 1.0 / l);
        let inv_cov = &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
        // symmetrize away rounding
        let inv_cov = (&inv_cov + inv_cov.transpose()) * 0.5;

        Ok(Self {
            class,
            points,
            source_indices,
            mean,
            inv_cov,
            depth_cache: None,
        })
    }

    pub fn class(&self) -> RefClass {
        self.class
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    pub fn source_indices(&self) -> &[usize] {
        &self.source_indices
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn inv_cov(&self) -> &DMatrix<f64> {
        &self.inv_cov
    }

    pub fn depth_cache(&self) -> Option<&DepthCache> {
        self.depth_cache.as_ref()
    }

    /// Computes the in-sample depth of every reference point under `spec`
    /// (each point counts itself) and stores it, replacing any earlier cache.
    pub fn with_depth_cache(mut self, spec: &DepthSpec) -> Result<Self> {
        let depths = DepthEvaluator::new(&self, spec)?.depths_of_rows(&self.points)?;
        self.depth_cache = Some(DepthCache { spec: *spec, depths });
        Ok(self)
    }

    /// The cached in-sample depths, provided they were built for `spec`.
    pub fn cached_depths(&self, spec: &DepthSpec) -> Result<&[f64]> {
        match &self.depth_cache {
            Some(cache) if cache.spec == *spec => Ok(&cache.depths),
            _ => Err(Error::DepthCacheMismatch(self.class.to_string())),
        }
    }
}
