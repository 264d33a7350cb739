//! Projection depth and its one-sided variant.

use super::points::{dot, PointSet};
use super::sphere::{sphere_optimize, SearchParams};
use super::stats::median_in_place;
use super::{ProjectionVariant, SphereOptimizer};
use crate::Result;

/// Standardized deviation of `query` from the reference along `direction`.
///
/// Symmetric: `|⟨p,q⟩ − med| / MAD`. Asymmetric: `(⟨p,q⟩ − med)₊` over the
/// median of the strictly positive deviations `(⟨p,m⟩ − med)₊`. A zero scale
/// gives `+∞` for a positive numerator and `0` otherwise.
pub fn outlyingness(direction: &[f64], query: &[f64], points: &PointSet, variant: ProjectionVariant) -> f64 {
    let mut scratch = Vec::with_capacity(points.len());
    outlyingness_with(direction, query, points, variant, &mut scratch)
}

pub(super) fn outlyingness_with(
    direction: &[f64],
    query: &[f64],
    points: &PointSet,
    variant: ProjectionVariant,
    scratch: &mut Vec<f64>,
) -> f64 {
    points.project_into(direction, scratch);
    let med = median_in_place(scratch);
    let x = dot(query, direction) - med;
    let (numerator, scale) = match variant {
        ProjectionVariant::Symmetric => {
            for v in scratch.iter_mut() {
                *v = (*v - med).abs();
            }
            (x.abs(), median_in_place(scratch))
        }
        ProjectionVariant::Asymmetric => {
            scratch.retain_mut(|v| {
                *v -= med;
                *v > 0.0
            });
            let scale = if scratch.is_empty() {
                0.0
            } else {
                median_in_place(scratch)
            };
            (x.max(0.0), scale)
        }
    };
    if scale > 0.0 {
        numerator / scale
    } else if numerator > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

pub(super) fn depth(
    query: &[f64],
    points: &PointSet,
    variant: ProjectionVariant,
    optimizer: SphereOptimizer,
    params: &SearchParams,
    seed: u64,
) -> Result<f64> {
    let mut scratch = Vec::with_capacity(points.len());
    let objective = |p: &[f64]| outlyingness_with(p, query, points, variant, &mut scratch);
    let (_, sup) = sphere_optimize(points.dim(), objective, optimizer, params, seed)?;
    Ok(if sup.is_infinite() { 0.0 } else { 1.0 / (1.0 + sup) })
}
