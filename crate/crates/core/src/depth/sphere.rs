//! Maximization of a real function over the unit sphere.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::points::dot;
use super::SphereOptimizer;
use crate::{Error, Result};

/// Unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Normalizes `v`; `None` when its norm is zero or not finite.
    pub fn from_unnormalized(mut v: Vec<f64>) -> Option<Self> {
        let norm = dot(&v, &v).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        Some(Self(v))
    }

    /// Uniform draw on the sphere via normalized Gaussian vectors.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            if let Some(d) = Self::from_unnormalized(v) {
                return d;
            }
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Budgets shared by the optimizers.
///
/// Coordinate descent and Nelder-Mead run `restarts` independent searches of
/// at most `max_iterations` sweeps/steps each. Refined random search spends
/// `evaluation_budget` evaluations in a single run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    pub restarts: usize,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub evaluation_budget: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            restarts: super::DEFAULT_RESTARTS,
            max_iterations: super::DEFAULT_MAX_ITERATIONS,
            convergence_tol: super::DEFAULT_CONVERGENCE_TOL,
            evaluation_budget: super::DEFAULT_RANDOM_SEARCH_EVALUATIONS,
        }
    }
}

const LINE_GRID: usize = 16;
const RANDOM_SEARCH_STAGES: usize = 10;
const RANDOM_SEARCH_SHRINK: f64 = 0.5;
const NELDER_MEAD_STEP: f64 = 0.5;
const NELDER_MEAD_REBUILDS: usize = 10;

/// Orders NaN below everything.
#[inline]
fn better(a: f64, b: f64) -> bool {
    !a.is_nan() && (b.is_nan() || a > b)
}

/// Remembers the best point ever evaluated, so the reported value is always
/// the objective at the reported direction.
struct Tracker<F> {
    objective: F,
    best_dir: Vec<f64>,
    best_val: f64,
}

impl<F: FnMut(&[f64]) -> f64> Tracker<F> {
    fn eval(&mut self, p: &[f64]) -> f64 {
        let v = (self.objective)(p);
        if better(v, self.best_val) {
            self.best_val = v;
            self.best_dir.clear();
            self.best_dir.extend_from_slice(p);
        }
        v
    }

    fn unbounded(&self) -> bool {
        self.best_val == f64::INFINITY
    }
}

fn normalize(v: &mut [f64]) -> bool {
    let n = dot(v, v).sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

/// Maximizes `objective` over unit vectors of length `dim`.
///
/// Returns the best direction evaluated and its value, which is a lower bound
/// on the supremum. A `+∞` value ends the search immediately. Fails only if no
/// evaluation produced a number.
pub fn sphere_optimize<F>(
    dim: usize,
    objective: F,
    optimizer: SphereOptimizer,
    params: &SearchParams,
    seed: u64,
) -> Result<(Direction, f64)>
where
    F: FnMut(&[f64]) -> f64,
{
    if dim == 0 {
        return Err(Error::InvalidParameter("sphere dimension must be positive".into()));
    }
    if params.restarts == 0 || params.max_iterations == 0 || params.evaluation_budget == 0 {
        return Err(Error::InvalidParameter("search budgets must be positive".into()));
    }
    let mut tracker = Tracker {
        objective,
        best_dir: vec![0.0; dim],
        best_val: f64::NAN,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    if dim == 1 {
        tracker.eval(&[1.0]);
        tracker.eval(&[-1.0]);
    } else {
        match optimizer {
            SphereOptimizer::CoordinateDescent => {
                for _ in 0..params.restarts {
                    let start = Direction::random(dim, &mut rng).into_inner();
                    coordinate_descent(&mut tracker, start, params);
                    if tracker.unbounded() {
                        break;
                    }
                }
            }
            SphereOptimizer::NelderMead => {
                for _ in 0..params.restarts {
                    let mut start = Direction::random(dim, &mut rng).into_inner();
                    let mut value = f64::NAN;
                    // rebuild the simplex around each converged point until it stops improving
                    for _ in 0..NELDER_MEAD_REBUILDS {
                        let (p, v) = nelder_mead(&mut tracker, &start, params);
                        let gained = !value.is_nan() && v - value > params.convergence_tol;
                        let first = value.is_nan();
                        start = p;
                        value = v;
                        if tracker.unbounded() || !(first || gained) {
                            break;
                        }
                    }
                    if tracker.unbounded() {
                        break;
                    }
                }
            }
            SphereOptimizer::RefinedRandomSearch => refined_random_search(&mut tracker, dim, params, &mut rng),
        }
    }

    if tracker.best_val.is_nan() {
        return Err(Error::ObjectiveNotFinite);
    }
    let dir = Direction(tracker.best_dir);
    Ok((dir, tracker.best_val))
}

/// Cyclic great-circle line searches toward each coordinate axis.
fn coordinate_descent<F: FnMut(&[f64]) -> f64>(tracker: &mut Tracker<F>, mut p: Vec<f64>, params: &SearchParams) {
    let dim = p.len();
    let tol = params.convergence_tol;
    let mut f = tracker.eval(&p);
    let mut axis = vec![0.0; dim];
    let mut candidate = vec![0.0; dim];

    for _ in 0..params.max_iterations {
        let start = f;
        for j in 0..dim {
            // axis = e_j minus its component along p
            for (i, a) in axis.iter_mut().enumerate() {
                *a = if i == j { 1.0 } else { 0.0 } - p[j] * p[i];
            }
            if dot(&axis, &axis) < 1e-16 || !normalize(&mut axis) {
                continue;
            }
            let at = |theta: f64, out: &mut Vec<f64>| {
                let (s, c) = theta.sin_cos();
                for i in 0..dim {
                    out[i] = c * p[i] + s * axis[i];
                }
                normalize(out);
            };
            let eval = |theta: f64, tracker: &mut Tracker<F>, buf: &mut Vec<f64>| {
                at(theta, buf);
                tracker.eval(buf)
            };

            let step = 2.0 * PI / LINE_GRID as f64;
            let (mut best_t, mut best_f) = (0.0, f);
            for g in 1..LINE_GRID {
                let t = -PI + step * g as f64;
                if t.abs() < 1e-15 {
                    continue;
                }
                let v = eval(t, tracker, &mut candidate);
                if better(v, best_f) {
                    best_t = t;
                    best_f = v;
                }
            }
            // golden-section refinement around the best grid angle
            let (mut a, mut b) = (best_t - step, best_t + step);
            let ratio = (5f64.sqrt() - 1.0) / 2.0;
            let mut x1 = b - ratio * (b - a);
            let mut x2 = a + ratio * (b - a);
            let mut f1 = eval(x1, tracker, &mut candidate);
            let mut f2 = eval(x2, tracker, &mut candidate);
            while b - a > tol && !tracker.unbounded() {
                if better(f1, f2) {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - ratio * (b - a);
                    f1 = eval(x1, tracker, &mut candidate);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + ratio * (b - a);
                    f2 = eval(x2, tracker, &mut candidate);
                }
            }
            for (t, v) in [(x1, f1), (x2, f2)] {
                if better(v, best_f) {
                    best_t = t;
                    best_f = v;
                }
            }
            if better(best_f, f) {
                at(best_t, &mut candidate);
                p.copy_from_slice(&candidate);
                f = best_f;
            }
            if tracker.unbounded() {
                return;
            }
        }
        if !(f - start > tol * start.abs().max(1.0)) {
            break;
        }
    }
}

/// Orthonormal basis of the tangent space at unit vector `p`.
fn tangent_basis(p: &[f64]) -> Vec<Vec<f64>> {
    let dim = p.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim - 1);
    for j in 0..dim {
        if basis.len() == dim - 1 {
            break;
        }
        let mut v: Vec<f64> = (0..dim).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
        let c = dot(&v, p);
        v.iter_mut().zip(p).for_each(|(x, pi)| *x -= c * pi);
        for b in &basis {
            let c = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, bi)| *x -= c * bi);
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    basis
}

/// Nelder-Mead in the tangent plane at `center`, mapped back to the sphere by
/// normalization. Returns the best vertex as a unit vector and its value.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    tracker: &mut Tracker<F>,
    center: &[f64],
    params: &SearchParams,
) -> (Vec<f64>, f64) {
    let dim = center.len();
    let m = dim - 1;
    let basis = tangent_basis(center);
    let to_sphere = |t: &[f64]| -> Vec<f64> {
        let mut x = center.to_vec();
        for (ti, b) in t.iter().zip(&basis) {
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += ti * bi;
            }
        }
        normalize(&mut x);
        x
    };
    // minimize the negated objective; NaN maps to +∞
    let cost = |t: &[f64], tracker: &mut Tracker<F>| -> f64 {
        let v = tracker.eval(&to_sphere(t));
        if v.is_nan() {
            f64::INFINITY
        } else {
            -v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    simplex.push(vec![0.0; m]);
    for i in 0..m {
        let mut v = vec![0.0; m];
        v[i] = NELDER_MEAD_STEP;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| cost(v, tracker)).collect();
    let tol = params.convergence_tol;

    for _ in 0..params.max_iterations {
        if tracker.unbounded() {
            break;
        }
        let mut order: Vec<usize> = (0..=m).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[m] - values[0];
        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if spread.abs() <= tol && diameter <= tol {
            break;
        }

        let mut centroid = vec![0.0; m];
        for v in &simplex[..m] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / m as f64;
            }
        }
        let towards = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[m])
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = towards(1.0);
        let fr = cost(&reflected, tracker);
        if fr < values[0] {
            let expanded = towards(2.0);
            let fe = cost(&expanded, tracker);
            if fe < fr {
                simplex[m] = expanded;
                values[m] = fe;
            } else {
                simplex[m] = reflected;
                values[m] = fr;
            }
        } else if fr < values[m - 1] {
            simplex[m] = reflected;
            values[m] = fr;
        } else {
            let (contracted, fc) = if fr < values[m] {
                let c = towards(0.5);
                let fc = cost(&c, tracker);
                (c, fc)
            } else {
                let c = towards(-0.5);
                let fc = cost(&c, tracker);
                (c, fc)
            };
            if fc < values[m].min(fr) {
                simplex[m] = contracted;
                values[m] = fc;
            } else {
                for i in 1..=m {
                    let shrunk: Vec<f64> = simplex[i]
                        .iter()
                        .zip(&simplex[0])
                        .map(|(x, b)| b + 0.5 * (x - b))
                        .collect();
                    values[i] = cost(&shrunk, tracker);
                    simplex[i] = shrunk;
                }
            }
        }
    }
    let best = (0..=m).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    (to_sphere(&simplex[best]), -values[best])
}

/// Uniform sampling followed by stages of Gaussian perturbation around the
/// incumbent with a geometrically shrinking spread.
fn refined_random_search<F: FnMut(&[f64]) -> f64>(
    tracker: &mut Tracker<F>,
    dim: usize,
    params: &SearchParams,
    rng: &mut ChaCha8Rng,
) {
    let budget = params.evaluation_budget;
    let stages = RANDOM_SEARCH_STAGES.min(budget);
    let per_stage = budget / stages;
    let first = budget - per_stage * (stages - 1);

    for _ in 0..first {
        let p = Direction::random(dim, rng);
        tracker.eval(p.as_slice());
        if tracker.unbounded() {
            return;
        }
    }
    let mut spread = RANDOM_SEARCH_SHRINK;
    let mut candidate = vec![0.0; dim];
    for _ in 1..stages {
        let center = tracker.best_dir.clone();
        if center.iter().all(|&x| x == 0.0) {
            return;
        }
        for _ in 0..per_stage {
            for (c, x) in candidate.iter_mut().zip(&center) {
                let z: f64 = rng.sample(StandardNormal);
                *c = x + spread * z;
            }
            if normalize(&mut candidate) {
                tracker.eval(&candidate);
                if tracker.unbounded() {
                    return;
                }
            }
        }
        spread *= RANDOM_SEARCH_SHRINK;
    }
}
