mod common;

use common::{gaussian_rows, lof_oracle, natural_lambda_oracle, uniform_rows};
use depthwatch::benchmarks::{
    natural_neighbors, BenchmarkMethod, CentralityScorer, IsolationForest, Kdeos, Kernel, Lof,
};
use depthwatch::depth::PointSet;

fn set(rows: &[Vec<f64>]) -> PointSet {
    PointSet::new(rows).unwrap()
}

fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[((v.len() - 1) as f64 * p).round() as usize]
}

#[test]
fn lof_matches_brute_force() {
    let rows = gaussian_rows(50, 2, 11);
    let p = set(&rows);
    let queries = gaussian_rows(20, 2, 12);
    for k in [1, 3, 10, 49] {
        let lof = Lof::fit(&p, k).unwrap();
        for q in queries.iter().chain(&rows[..5]) {
            let a = lof.score(q);
            let b = lof_oracle(&rows, q, k);
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "k={k}: {a} vs {b}");
        }
    }
}

#[test]
fn lof_reference_behaviour() {
    let rows = uniform_rows(50, 2, 5);
    let p = set(&rows);
    let lof = Lof::fit(&p, 10).unwrap();
    assert!((lof.score(&[0.5, 0.5]) - 1.0).abs() <= 0.2);
    assert!(lof.score(&[100.0, 100.0]) > 5.0);

    let mean = rows.iter().map(|r| lof.score(r)).sum::<f64>() / rows.len() as f64;
    assert!((0.9..=1.2).contains(&mean), "{mean}");

    // symmetric square with its center excluded from the sample
    let sym: Vec<Vec<f64>> = vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]];
    let lof = Lof::fit(&set(&sym), 3).unwrap();
    assert!(lof.score(&[0.0, 0.0]) <= 1.0 + 1e-6);
}

#[test]
fn lof_rejects_bad_k() {
    let p = set(&gaussian_rows(10, 2, 1));
    assert!(Lof::fit(&p, 0).is_err());
    assert!(Lof::fit(&p, 10).is_err());
}

#[test]
fn nof_matches_brute_force() {
    for seed in 0..4 {
        let rows = gaussian_rows(50, 2, 100 + seed);
        let p = set(&rows);
        let nn = natural_neighbors(&p).unwrap();
        assert_eq!(nn.lambda, natural_lambda_oracle(&rows));
        let s = CentralityScorer::fit(BenchmarkMethod::Nof, &p, (0..50).collect()).unwrap();
        for q in gaussian_rows(10, 2, 200 + seed) {
            let a = s.score(&q).unwrap();
            let b = lof_oracle(&rows, &q, nn.lambda);
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }
}

#[test]
fn nof_on_grid() {
    let rows: Vec<Vec<f64>> = (0..21).map(|i| vec![i as f64]).collect();
    let p = set(&rows);
    let nn = natural_neighbors(&p).unwrap();
    assert!(nn.lambda <= 3, "{}", nn.lambda);
    let s = CentralityScorer::fit(BenchmarkMethod::Nof, &p, (0..21).collect()).unwrap();
    assert!((s.score(&[10.5]).unwrap() - 1.0).abs() < 0.2);
    let far = s.score(&[60.0]).unwrap();
    assert!(rows.iter().all(|r| s.score(r).unwrap() < far));

    let three = set(&[vec![0.0], vec![1.0], vec![5.0]]);
    let nn = natural_neighbors(&three).unwrap();
    assert!((1..=2).contains(&nn.lambda));
    let s = CentralityScorer::fit(BenchmarkMethod::Nof, &three, vec![0, 1, 2]).unwrap();
    assert!(s.score(&[2.0]).unwrap().is_finite());
}

#[test]
fn kdeos_orders_center_and_remote() {
    let rows = gaussian_rows(50, 2, 21);
    let p = set(&rows);
    for kernel in [Kernel::Gaussian, Kernel::Epanechnikov] {
        let m = Kdeos::fit(&p, kernel, 5, 20).unwrap();
        let refs: Vec<f64> = rows.iter().map(|r| m.score(r)).collect();
        let center = m.score(&[0.0, 0.0]);
        let remote = m.score(&[25.0, -25.0]);
        assert!(center < percentile(&refs, 0.1), "{kernel:?}: {center}");
        assert!(remote > percentile(&refs, 0.99), "{kernel:?}: {remote}");
    }
}

#[test]
fn kdeos_single_k() {
    let rows = gaussian_rows(50, 3, 22);
    let p = set(&rows);
    let a = Kdeos::fit(&p, Kernel::Gaussian, 7, 7).unwrap();
    let b = Kdeos::fit(&p, Kernel::Gaussian, 5, 9).unwrap();
    let q = [0.3, -0.2, 0.1];
    assert!(a.score(&q).is_finite());
    assert!(Kdeos::fit(&p, Kernel::Gaussian, 6, 5).is_err());
    assert!(b.score(&q).is_finite());
}

fn two_clusters() -> Vec<Vec<f64>> {
    let mut rows = gaussian_rows(100, 2, 31);
    for r in rows.iter_mut().skip(50) {
        r[0] += 8.0;
    }
    rows
}

#[test]
fn iforest_isolates_remote_point() {
    let rows = two_clusters();
    let f = IsolationForest::fit(&set(&rows), 100, 64, 42).unwrap();
    let cluster = f.score(&[0.0, 0.0]);
    let isolated = f.score(&[4.0, 12.0]);
    assert!(cluster < 0.5, "{cluster}");
    assert!(isolated > 0.6, "{isolated}");
}

#[test]
fn iforest_is_deterministic() {
    let rows = two_clusters();
    let a = IsolationForest::fit(&set(&rows), 20, 32, 3).unwrap();
    let b = IsolationForest::fit(&set(&rows), 20, 32, 3).unwrap();
    let c = IsolationForest::fit(&set(&rows), 20, 32, 4).unwrap();
    let q = [1.0, 2.0];
    assert_eq!(a.score(&q), b.score(&q));
    assert_ne!(a.score(&q), c.score(&q));
    assert!(IsolationForest::fit(&set(&rows), 0, 32, 3).is_err());
    assert!(IsolationForest::fit(&set(&rows), 1, 1, 3).is_err());
    assert!(IsolationForest::fit(&set(&rows), 1, 101, 3).is_err());
}

#[test]
fn mdis_scorer_needs_scalars() {
    let p = set(&gaussian_rows(10, 2, 1));
    assert!(CentralityScorer::fit(BenchmarkMethod::MDis, &p, (0..10).collect()).is_err());
    let s = set(&[vec![0.0], vec![1.0]]);
    let m = CentralityScorer::fit(BenchmarkMethod::MDis, &s, vec![0, 1]).unwrap();
    assert_eq!(m.score(&[1.5]).unwrap(), 2.0);
}
