//! Fixtures and brute-force oracles shared by integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian_rows(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}

pub fn uniform_rows(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Indices of all points other than `skip`, by distance to `x`, then index.
fn sorted_by_distance(rows: &[Vec<f64>], x: &[f64], skip: Option<usize>) -> Vec<(f64, usize)> {
    let mut v: Vec<(f64, usize)> = (0..rows.len())
        .filter(|&i| Some(i) != skip)
        .map(|i| (dist(x, &rows[i]), i))
        .collect();
    v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    v
}

/// Textbook local outlier factor of `query` against `rows`, computed from
/// full distance sorts.
pub fn lof_oracle(rows: &[Vec<f64>], query: &[f64], k: usize) -> f64 {
    let n = rows.len();
    let neigh: Vec<Vec<(f64, usize)>> = (0..n)
        .map(|i| sorted_by_distance(rows, &rows[i], Some(i))[..k].to_vec())
        .collect();
    let kdist: Vec<f64> = neigh.iter().map(|nb| nb[k - 1].0).collect();
    let lrd_of = |nb: &[(f64, usize)]| {
        let total: f64 = nb.iter().map(|&(d, o)| if d > kdist[o] { d } else { kdist[o] }).sum();
        k as f64 / total
    };
    let lrd: Vec<f64> = neigh.iter().map(|nb| lrd_of(nb)).collect();
    let qn = sorted_by_distance(rows, query, None)[..k].to_vec();
    let lq = lrd_of(&qn);
    qn.iter().map(|&(_, o)| lrd[o] / lq).sum::<f64>() / k as f64
}

/// Natural-neighbor eigenvalue by a reverse-neighbor scan that recomputes
/// every neighborhood at every k.
pub fn natural_lambda_oracle(rows: &[Vec<f64>]) -> usize {
    let n = rows.len();
    for k in 1..n {
        let covered = (0..n).all(|o| {
            (0..n).any(|p| {
                p != o
                    && sorted_by_distance(rows, &rows[p], Some(p))[..k]
                        .iter()
                        .any(|&(_, j)| j == o)
            })
        });
        if covered {
            return k;
        }
    }
    n - 1
}

/// Whether `q` lies strictly inside the simplex spanned by `verts`
/// (`dim + 1` vertices), via Gaussian elimination on barycentric
/// coordinates.
pub fn in_open_simplex(q: &[f64], verts: &[&[f64]]) -> bool {
    let d = q.len();
    // columns v_j - v_0, right-hand side q - v_0
    let mut a: Vec<Vec<f64>> = (0..d)
        .map(|r| {
            let mut row: Vec<f64> = (1..=d).map(|j| verts[j][r] - verts[0][r]).collect();
            row.push(q[r] - verts[0][r]);
            row
        })
        .collect();
    for c in 0..d {
        let piv = (c..d)
            .max_by(|&x, &y| a[x][c].abs().partial_cmp(&a[y][c].abs()).unwrap())
            .unwrap();
        if a[piv][c].abs() < 1e-12 {
            return false;
        }
        a.swap(c, piv);
        for r in 0..d {
            if r != c {
                let f = a[r][c] / a[c][c];
                for j in c..=d {
                    a[r][j] -= f * a[c][j];
                }
            }
        }
    }
    let lam: Vec<f64> = (0..d).map(|r| a[r][d] / a[r][r]).collect();
    let l0 = 1.0 - lam.iter().sum::<f64>();
    l0 > 1e-12 && lam.iter().all(|&l| l > 1e-12)
}

/// Fraction of all `(dim + 1)`-subsets whose open simplex contains `q`.
pub fn simplicial_oracle(q: &[f64], rows: &[Vec<f64>]) -> f64 {
    let d = q.len();
    let n = rows.len();
    let mut idx: Vec<usize> = (0..=d).collect();
    let (mut hits, mut total) = (0usize, 0usize);
    loop {
        let verts: Vec<&[f64]> = idx.iter().map(|&i| rows[i].as_slice()).collect();
        total += 1;
        if in_open_simplex(q, &verts) {
            hits += 1;
        }
        // next combination
        let mut i = d as isize;
        while i >= 0 && idx[i as usize] == n - 1 - (d - i as usize) {
            i -= 1;
        }
        if i < 0 {
            break;
        }
        idx[i as usize] += 1;
        for j in (i as usize + 1)..=d {
            idx[j] = idx[j - 1] + 1;
        }
    }
    hits as f64 / total as f64
}

/// Projection outlyingness along `p` computed by sorting.
pub fn projection_outlyingness_oracle(p: &[f64], q: &[f64], rows: &[Vec<f64>], asymmetric: bool) -> f64 {
    let median = |v: &mut Vec<f64>| {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = v.len();
        if m % 2 == 1 {
            v[m / 2]
        } else {
            0.5 * (v[m / 2 - 1] + v[m / 2])
        }
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut proj: Vec<f64> = rows.iter().map(|r| dot(r, p)).collect();
    let med = median(&mut proj);
    let x = dot(q, p) - med;
    let (num, mut dev) = if asymmetric {
        (
            x.max(0.0),
            proj.iter().map(|v| v - med).filter(|d| *d > 0.0).collect::<Vec<_>>(),
        )
    } else {
        (x.abs(), proj.iter().map(|v| (v - med).abs()).collect())
    };
    let scale = if dev.is_empty() { 0.0 } else { median(&mut dev) };
    if scale > 0.0 {
        num / scale
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Projection depth from `steps` evenly spaced directions on the circle.
pub fn projection_grid_2d(q: &[f64], rows: &[Vec<f64>], asymmetric: bool, steps: usize) -> f64 {
    let sup = (0..steps)
        .map(|s| {
            let t = 2.0 * std::f64::consts::PI * s as f64 / steps as f64;
            projection_outlyingness_oracle(&[t.cos(), t.sin()], q, rows, asymmetric)
        })
        .fold(0.0, f64::max);
    1.0 / (1.0 + sup)
}
