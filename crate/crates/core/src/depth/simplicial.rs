//! Exact Simplicial depth by enumeration of all (k+1)-subsets.
//!
//! With `v_i = m_i − q`, the query lies in the open simplex of `k + 1`
//! vertices iff the null vector of `[v_0 … v_k]`, whose components are
//! `(−1)^j det(V without column j)`, has all components nonzero and of one
//! sign. Each query needs the signs of all `C(n, k)` minors once, after which
//! each simplex costs `k + 1` table lookups.

use super::points::PointSet;

pub(super) const MAX_DIM: usize = 3;

/// Binomial coefficients `C(i, j)` for `i ≤ n`, `j ≤ r`.
pub(super) struct Binomials {
    r: usize,
    table: Vec<u64>,
}

impl Binomials {
    pub(super) fn new(n: usize, r: usize) -> Self {
        let mut table = vec![0u64; (n + 1) * (r + 1)];
        for i in 0..=n {
            table[i * (r + 1)] = 1;
            for j in 1..=r.min(i) {
                let a = table[(i - 1) * (r + 1) + j - 1];
                let b = if j <= i - 1 { table[(i - 1) * (r + 1) + j] } else { 0 };
                table[i * (r + 1) + j] = a + b;
            }
        }
        Self { r, table }
    }

    #[inline]
    pub(super) fn get(&self, n: usize, k: usize) -> u64 {
        if k > self.r {
            return 0;
        }
        self.table[n * (self.r + 1) + k]
    }
}

#[inline]
fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

#[inline]
fn det2(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn det3(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Number of open simplices with vertices in `points` that contain `query`.
pub(super) fn containing_count(query: &[f64], points: &PointSet, binom: &Binomials) -> u64 {
    let (n, k) = (points.len(), points.dim());
    let v: Vec<f64> = points
        .rows()
        .flat_map(|row| row.iter().zip(query).map(|(m, q)| m - q))
        .collect();
    let at = |i: usize| &v[i * k..(i + 1) * k];

    match k {
        1 => {
            // open interval: one endpoint strictly below, the other strictly above
            let below = v.iter().filter(|&&x| x < 0.0).count() as u64;
            let above = v.iter().filter(|&&x| x > 0.0).count() as u64;
            below * above
        }
        2 => {
            let mut s = vec![0i8; n * n];
            for i in 0..n {
                for j in i + 1..n {
                    s[i * n + j] = sign(det2(at(i), at(j)));
                }
            }
            let mut count = 0u64;
            for a in 0..n {
                for b in a + 1..n {
                    let s_ab = s[a * n + b];
                    if s_ab == 0 {
                        continue;
                    }
                    // components: +s(b,c), −s(a,c), +s(a,b)
                    for c in b + 1..n {
                        if s[b * n + c] == s_ab && s[a * n + c] == -s_ab {
                            count += 1;
                        }
                    }
                }
            }
            count
        }
        3 if n <= BITSET_MAX_POINTS => count_3d_bitsets(n, &at),
        3 => count_3d_table(n, &at, binom),
        _ => unreachable!("dimension checked by the evaluator"),
    }
}

/// 3-D count from a table of the signs of all `C(n, 3)` minors.
fn count_3d_table<'a>(n: usize, at: &impl Fn(usize) -> &'a [f64], binom: &Binomials) -> u64 {
    let idx = |i: usize, j: usize, l: usize| (binom.get(l, 3) + binom.get(j, 2) + binom.get(i, 1)) as usize;
    let mut s = vec![0i8; binom.get(n, 3) as usize];
    for l in 2..n {
        for j in 1..l {
            for i in 0..j {
                s[idx(i, j, l)] = sign(det3(at(i), at(j), at(l)));
            }
        }
    }
    let mut count = 0u64;
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let s_abc = s[idx(a, b, c)];
                if s_abc == 0 {
                    continue;
                }
                // components: +s(b,c,d), −s(a,c,d), +s(a,b,d), −s(a,b,c)
                for d in c + 1..n {
                    if s[idx(a, b, d)] == -s_abc && s[idx(a, c, d)] == s_abc && s[idx(b, c, d)] == -s_abc {
                        count += 1;
                    }
                }
            }
        }
    }
    count
}

/// Largest reference size for which the 3-D count uses per-pair bitsets
/// (memory grows as n³/64 words).
const BITSET_MAX_POINTS: usize = 512;

/// 3-D count with, for every pair `x < y`, bitsets of the `d > y` at which
/// the minor `(x, y, d)` is positive or negative. The innermost loop over `d`
/// becomes an intersection of three bitsets.
fn count_3d_bitsets<'a>(n: usize, at: &impl Fn(usize) -> &'a [f64]) -> u64 {
    let words = n.div_ceil(64);
    let pair = |x: usize, y: usize| (y * (y - 1) / 2 + x) * words;
    let pairs = n * (n - 1) / 2;
    let mut pos = vec![0u64; pairs * words];
    let mut neg = vec![0u64; pairs * words];
    for y in 1..n {
        for x in 0..y {
            let base = pair(x, y);
            for d in y + 1..n {
                let sg = sign(det3(at(x), at(y), at(d)));
                if sg > 0 {
                    pos[base + d / 64] |= 1 << (d % 64);
                } else if sg < 0 {
                    neg[base + d / 64] |= 1 << (d % 64);
                }
            }
        }
    }
    let mut count = 0u64;
    for c in 2..n {
        for b in 1..c {
            let bc = pair(b, c);
            for a in 0..b {
                let (ab, ac) = (pair(a, b), pair(a, c));
                // sign of the (a, b, c) minor is stored in the (a, b) sets
                let bit = 1u64 << (c % 64);
                let s_abc: i8 = if pos[ab + c / 64] & bit != 0 {
                    1
                } else if neg[ab + c / 64] & bit != 0 {
                    -1
                } else {
                    continue;
                };
                // need s(a,b,d) = −s, s(a,c,d) = s, s(b,c,d) = −s for d > c
                let (same, opposite) = if s_abc > 0 { (&pos, &neg) } else { (&neg, &pos) };
                for w in c / 64..words {
                    let m = opposite[ab + w] & same[ac + w] & opposite[bc + w];
                    count += u64::from(m.count_ones());
                }
            }
        }
    }
    count
}

pub(super) fn depth(query: &[f64], points: &PointSet, binom: &Binomials) -> f64 {
    let k = points.dim();
    let total = binom.get(points.len(), k + 1);
    if total == 0 {
        return 0.0;
    }
    containing_count(query, points, binom) as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bitset_and_table_counts_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [5, 64, 65, 130] {
            // coarse integer grid to include coplanar quadruples
            let v: Vec<f64> = (0..3 * n).map(|_| rng.random_range(-3..=3) as f64).collect();
            let at = |i: usize| &v[3 * i..3 * i + 3];
            let binom = Binomials::new(n, 4);
            assert_eq!(count_3d_bitsets(n, &at), count_3d_table(n, &at, &binom), "n = {n}");
        }
    }
}
