//! Rank statistics and the r and Q control charts.
//!
//! The r statistic of a query is the fraction of reference points whose
//! centrality is at most the query's; the chart signals when `r ≤ α`. The Q
//! chart averages `n` consecutive r values and signals when the mean falls at
//! or below the `α` quantile of the Bates distribution. There is no upper
//! limit: large ranks mean the query is central.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth::{DepthEvaluator, DepthSpec, ReferenceSet};
use crate::reference::{ClassId, EmbeddingRecord, Phase, RefClass};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    R,
    Q,
}

/// Chart type, false-alarm probability and the derived lower control limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartConfig {
    pub kind: ChartKind,
    pub alpha: f64,
    pub batch_size: usize,
    pub lcl: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

impl ChartConfig {
    /// Single-observation chart with `LCL = α`.
    pub fn r(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            kind: ChartKind::R,
            alpha,
            batch_size: 1,
            lcl: alpha,
        })
    }

    /// Batch-mean chart over `n ≥ 2` consecutive ranks.
    pub fn q(alpha: f64, n: usize) -> Result<Self> {
        let lcl = q_lcl(alpha, n)?;
        Ok(Self {
            kind: ChartKind::Q,
            alpha,
            batch_size: n,
            lcl,
        })
    }

    pub fn signals(&self, statistic: f64) -> bool {
        statistic <= self.lcl
    }
}

/// One plotted chart point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRecord {
    /// Stream index of the observation (last member for a Q-chart batch).
    pub index: usize,
    pub class_used: RefClass,
    pub statistic: f64,
    pub signal: bool,
    pub phase: Phase,
}

/// `#{D_t ≤ D_query} / |R|`; ties count toward the rank.
pub fn r_statistic(query_depth: f64, ref_depths: &[f64]) -> f64 {
    let below = ref_depths.iter().filter(|&&d| d <= query_depth).count();
    below as f64 / ref_depths.len() as f64
}

/// Mean of a batch of r values.
pub fn q_statistic(r_values: &[f64]) -> f64 {
    r_values.iter().sum::<f64>() / r_values.len() as f64
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// CDF of the mean of `n` independent uniform(0, 1) variables.
pub fn bates_cdf(x: f64, n: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    // Irwin-Hall CDF of the sum at s = n x
    let s = n as f64 * x;
    let mut total = 0.0;
    for k in 0..=(s.floor() as usize).min(n) {
        let term = binomial(n, k) * (s - k as f64).powi(n as i32);
        total += if k % 2 == 0 { term } else { -term };
    }
    (total / factorial(n)).clamp(0.0, 1.0)
}

/// Root of `bates_cdf(x, n) = alpha` by bisection on (0, 1).
pub fn bates_quantile(alpha: f64, n: usize) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bates_cdf(mid, n) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Lower control limit of the Q chart.
///
/// For `α ≤ 1/n!` the limit lies in the first polynomial piece of the Bates
/// CDF and has the closed form `(n! α)^{1/n} / n`; otherwise the CDF is
/// inverted numerically.
pub fn q_lcl(alpha: f64, n: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "Q-chart batch size must be at least 2, got {n}"
        )));
    }
    let nf = factorial(n);
    if alpha <= 1.0 / nf {
        Ok((nf * alpha).powf(1.0 / n as f64) / n as f64)
    } else {
        Ok(bates_quantile(alpha, n))
    }
}

/// A fitted centrality function (data depth, or a benchmark score oriented so
/// that larger means more central) together with the in-sample centralities
/// of its reference points.
pub trait CentralityModel: Sync {
    fn centrality(&self, query: &[f64]) -> Result<f64>;

    fn reference_centrality(&self) -> &[f64];

    /// Stream indices of the reference points, aligned with
    /// [`reference_centrality`](Self::reference_centrality).
    fn reference_indices(&self) -> &[usize];
}

/// Depth under one spec against one reference set with cached depths.
pub struct DepthModel<'a> {
    evaluator: DepthEvaluator<'a>,
    reference: &'a ReferenceSet,
    depths: &'a [f64],
}

impl<'a> DepthModel<'a> {
    /// Fails if the reference set has no cache for `spec`.
    pub fn new(reference: &'a ReferenceSet, spec: &DepthSpec) -> Result<Self> {
        let depths = reference.cached_depths(spec)?;
        Ok(Self {
            evaluator: DepthEvaluator::new(reference, spec)?,
            reference,
            depths,
        })
    }
}

impl CentralityModel for DepthModel<'_> {
    fn centrality(&self, query: &[f64]) -> Result<f64> {
        self.evaluator.depth(query)
    }

    fn reference_centrality(&self) -> &[f64] {
        self.depths
    }

    fn reference_indices(&self) -> &[usize] {
        self.reference.source_indices()
    }
}

/// Which vector of a record is monitored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    /// The embedding vector.
    #[default]
    Embedding,
    /// The softmax score of the predicted class, as a 1-vector.
    Confidence,
}

impl Feature {
    pub fn extract(self, record: &EmbeddingRecord) -> Result<Vec<f64>> {
        match self {
            Feature::Embedding => Ok(record.embedding.clone()),
            Feature::Confidence => record
                .confidence()
                .map(|c| vec![c])
                .ok_or_else(|| Error::InvalidRecord {
                    index: record.index,
                    reason: "no softmax score for the predicted class".into(),
                }),
        }
    }
}

/// Picks the model for a predicted class, falling back to a merged model.
pub fn select_model<M>(models: &BTreeMap<RefClass, M>, predicted: ClassId) -> Result<(RefClass, &M)> {
    let key = RefClass::Class(predicted);
    if let Some(m) = models.get(&key) {
        return Ok((key, m));
    }
    models
        .get(&RefClass::Merged)
        .map(|m| (RefClass::Merged, m))
        .ok_or_else(|| Error::UnknownClass(predicted.to_string()))
}

struct Ranked {
    index: usize,
    class_used: RefClass,
    r: f64,
    phase: Phase,
}

fn chart(ranked: Vec<Ranked>, config: &ChartConfig) -> Vec<SignalRecord> {
    match config.kind {
        ChartKind::R => ranked
            .into_iter()
            .map(|x| SignalRecord {
                index: x.index,
                class_used: x.class_used,
                statistic: x.r,
                signal: config.signals(x.r),
                phase: x.phase,
            })
            .collect(),
        ChartKind::Q => ranked
            .chunks_exact(config.batch_size)
            .map(|batch| {
                let rs: Vec<f64> = batch.iter().map(|x| x.r).collect();
                let q = q_statistic(&rs);
                let last = batch.last().expect("non-empty batch");
                SignalRecord {
                    index: last.index,
                    class_used: last.class_used,
                    statistic: q,
                    signal: config.signals(q),
                    phase: last.phase,
                }
            })
            .collect(),
    }
}

/// Charts a stream against per-class centrality models.
///
/// Each record is scored against the model of its predicted class (or the
/// merged model). For the Q chart, ranks are batched in arrival order across
/// classes; a batch takes the index, class and phase of its last member and a
/// trailing partial batch is dropped.
pub fn monitor_with<M: CentralityModel>(
    records: &[EmbeddingRecord],
    models: &BTreeMap<RefClass, M>,
    feature: Feature,
    config: &ChartConfig,
) -> Result<Vec<SignalRecord>> {
    let ranked: Vec<Ranked> = records
        .par_iter()
        .map(|record| {
            let (class_used, model) = select_model(models, record.predicted_label)?;
            let x = feature.extract(record)?;
            let c = model.centrality(&x)?;
            Ok(Ranked {
                index: record.index,
                class_used,
                r: r_statistic(c, model.reference_centrality()),
                phase: record.phase,
            })
        })
        .collect::<Result<_>>()?;
    Ok(chart(ranked, config))
}

/// Charts a stream of embeddings by data depth. Every reference set must
/// carry a depth cache built for `spec`.
pub fn monitor_stream(
    records: &[EmbeddingRecord],
    refs: &BTreeMap<RefClass, ReferenceSet>,
    spec: &DepthSpec,
    config: &ChartConfig,
) -> Result<Vec<SignalRecord>> {
    let models = depth_models(refs, spec)?;
    monitor_with(records, &models, Feature::Embedding, config)
}

pub fn depth_models<'a>(
    refs: &'a BTreeMap<RefClass, ReferenceSet>,
    spec: &DepthSpec,
) -> Result<BTreeMap<RefClass, DepthModel<'a>>> {
    refs.iter().map(|(k, r)| Ok((*k, DepthModel::new(r, spec)?))).collect()
}

/// How reference points are ranked against their own sample in Phase I.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InSampleRank {
    /// The point counts itself, so `r ≥ 1/|R|`.
    #[default]
    Inclusive,
    /// The point is removed from its own rank count.
    LeaveOneOut,
}

/// Phase I chart of every reference point against its own sample, in model
/// order. Q-chart batches are formed within each reference sample.
pub fn phase1_signals<M: CentralityModel>(
    models: &BTreeMap<RefClass, M>,
    config: &ChartConfig,
    rank: InSampleRank,
) -> Vec<SignalRecord> {
    let mut out = Vec::new();
    for (class, model) in models {
        let depths = model.reference_centrality();
        let n = depths.len();
        let ranked: Vec<Ranked> = depths
            .iter()
            .zip(model.reference_indices())
            .map(|(&d, &index)| {
                let r = match rank {
                    InSampleRank::Inclusive => r_statistic(d, depths),
                    InSampleRank::LeaveOneOut => {
                        let below = depths.iter().filter(|&&t| t <= d).count();
                        (below - 1) as f64 / (n - 1) as f64
                    }
                };
                Ranked {
                    index,
                    class_used: *class,
                    r,
                    phase: Phase::PhaseI,
                }
            })
            .collect();
        out.extend(chart(ranked, config));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn r_statistic_edges() {
        let refs = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(r_statistic(0.9, &refs), 1.0);
        assert_eq!(r_statistic(0.05, &refs), 0.0);
        assert_eq!(r_statistic(0.2, &refs), 0.5);
    }

    #[test]
    fn q_statistic_means() {
        assert_eq!(q_statistic(&[1.0, 1.0, 1.0]), 1.0);
        assert!((q_statistic(&[0.2, 0.4, 0.6]) - 0.4).abs() < 1e-15);
        let cfg = ChartConfig {
            kind: ChartKind::Q,
            alpha: 0.05,
            batch_size: 5,
            lcl: 0.29,
        };
        assert!(cfg.signals(q_statistic(&[0.29; 5])));
    }

    #[test]
    fn q_lcl_reported_values() {
        let l3 = q_lcl(0.05, 3).unwrap();
        assert!((l3 - 0.3f64.powf(1.0 / 3.0) / 3.0).abs() < 1e-15);
        assert_eq!((l3 * 100.0).round() / 100.0, 0.22);
        let l5 = q_lcl(0.05, 5).unwrap();
        assert_eq!((l5 * 100.0).round() / 100.0, 0.29);
        assert!((bates_cdf(l5, 5) - 0.05).abs() < 1e-10);
    }

    #[test]
    fn q_lcl_branches_meet_at_knot() {
        for n in 2..8 {
            let alpha = 1.0 / factorial(n);
            let closed = q_lcl(alpha, n).unwrap();
            assert!((closed - 1.0 / n as f64).abs() < 1e-12);
            assert!((bates_quantile(alpha, n) - closed).abs() < 1e-9);
        }
    }

    #[test]
    fn q_lcl_branches_agree_below_knot() {
        for n in 2..7 {
            for frac in [0.01, 0.1, 0.5, 0.9] {
                let alpha = frac / factorial(n);
                let closed = q_lcl(alpha, n).unwrap();
                assert!((bates_quantile(alpha, n) - closed).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn q_lcl_rejects_bad_input() {
        assert!(q_lcl(0.0, 3).is_err());
        assert!(q_lcl(1.0, 3).is_err());
        assert!(q_lcl(0.05, 1).is_err());
        assert!(ChartConfig::r(0.0).is_err());
    }

    #[test]
    fn bates_cdf_matches_irwin_hall_small_cases() {
        // n = 2: triangular distribution of the mean
        for &x in &[0.1, 0.3, 0.5, 0.7, 0.95] {
            let expected = if x <= 0.5 {
                2.0 * x * x
            } else {
                1.0 - 2.0 * (1.0 - x) * (1.0 - x)
            };
            assert!((bates_cdf(x, 2) - expected).abs() < 1e-14);
        }
        assert!((bates_cdf(0.5, 7) - 0.5).abs() < 1e-12);
    }

    struct Fixed {
        refs: Vec<f64>,
        idx: Vec<usize>,
    }

    impl CentralityModel for Fixed {
        fn centrality(&self, q: &[f64]) -> Result<f64> {
            Ok(-q[0].abs())
        }
        fn reference_centrality(&self) -> &[f64] {
            &self.refs
        }
        fn reference_indices(&self) -> &[usize] {
            &self.idx
        }
    }

    fn record(index: usize, x: f64, predicted: u32, phase: Phase) -> EmbeddingRecord {
        EmbeddingRecord {
            index,
            embedding: vec![x],
            true_label: None,
            predicted_label: ClassId(predicted),
            softmax: None,
            phase,
        }
    }

    fn models() -> BTreeMap<RefClass, Fixed> {
        let refs: Vec<f64> = (0..20).map(|i| -(i as f64) / 10.0).collect();
        let idx = (0..20).collect();
        BTreeMap::from([(RefClass::Class(ClassId(0)), Fixed { refs, idx })])
    }

    #[test]
    fn empty_stream() {
        let out = monitor_with(&[], &models(), Feature::Embedding, &ChartConfig::r(0.05).unwrap()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn unknown_class_is_an_error() {
        let recs = [record(0, 0.0, 3, Phase::PhaseIIInControl)];
        let err = monitor_with(&recs, &models(), Feature::Embedding, &ChartConfig::r(0.05).unwrap());
        assert!(matches!(err, Err(Error::UnknownClass(c)) if c == "3"));
    }

    #[test]
    fn output_lengths() {
        let recs: Vec<_> = (0..13)
            .map(|i| record(i, i as f64 * 0.2, 0, Phase::PhaseIIInControl))
            .collect();
        let r = monitor_with(&recs, &models(), Feature::Embedding, &ChartConfig::r(0.05).unwrap()).unwrap();
        assert_eq!(r.len(), 13);
        let q = monitor_with(&recs, &models(), Feature::Embedding, &ChartConfig::q(0.05, 5).unwrap()).unwrap();
        assert_eq!(q.len(), 2);
        assert_eq!(q[0].index, 4);
        let rs: Vec<f64> = r[..5].iter().map(|s| s.statistic).collect();
        assert_eq!(q[0].statistic, q_statistic(&rs));
    }

    #[test]
    fn far_queries_all_signal_in_both_charts() {
        let recs: Vec<_> = (0..10)
            .map(|i| record(i, 100.0 + i as f64, 0, Phase::PhaseIIOutOfControl))
            .collect();
        let r = monitor_with(&recs, &models(), Feature::Embedding, &ChartConfig::r(0.05).unwrap()).unwrap();
        assert!(r.iter().all(|s| s.signal && s.statistic == 0.0));
        let q = monitor_with(&recs, &models(), Feature::Embedding, &ChartConfig::q(0.05, 5).unwrap()).unwrap();
        assert_eq!(q.len(), 2);
        assert!(q.iter().all(|s| s.signal));
    }

    #[test]
    fn phase1_inclusive_rank_gives_alpha_fraction() {
        let out = phase1_signals(&models(), &ChartConfig::r(0.05).unwrap(), InSampleRank::Inclusive);
        assert_eq!(out.iter().filter(|s| s.signal).count(), 1);
        assert!(out.iter().all(|s| s.statistic >= 1.0 / 20.0));
        let loo = phase1_signals(&models(), &ChartConfig::r(0.05).unwrap(), InSampleRank::LeaveOneOut);
        assert_eq!(loo.iter().filter(|s| s.statistic == 0.0).count(), 1);
    }

    #[test]
    fn resampled_ranks_are_calibrated() {
        let n = 200;
        let refs: Vec<f64> = (0..n).map(|i| ((i * 37) % 101) as f64 + i as f64 * 1e-3).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 10_000;
        let alpha = 0.05;
        let hits = (0..draws)
            .filter(|_| r_statistic(refs[rng.random_range(0..n)], &refs) <= alpha)
            .count();
        let p = hits as f64 / draws as f64;
        assert!((p - alpha).abs() < 3.0 * (alpha * (1.0 - alpha) / draws as f64).sqrt());
    }

    proptest! {
        #[test]
        fn r_invariant_under_monotone_transform(
            refs in prop::collection::vec(-10.0f64..10.0, 1..40),
            q in -12.0f64..12.0,
        ) {
            let f = |x: f64| (x / 3.0).exp() + x * x * x;
            let mapped: Vec<f64> = refs.iter().map(|&x| f(x)).collect();
            prop_assert_eq!(r_statistic(q, &refs), r_statistic(f(q), &mapped));
        }

        #[test]
        fn lower_alpha_never_adds_signals(stat in 0.0f64..1.0, a in 0.001f64..0.999, b in 0.001f64..0.999) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let lo_cfg = ChartConfig::r(lo).unwrap();
            let hi_cfg = ChartConfig::r(hi).unwrap();
            prop_assert!(!lo_cfg.signals(stat) || hi_cfg.signals(stat));
            for n in [2usize, 3, 5] {
                let lq = ChartConfig::q(lo, n).unwrap();
                let hq = ChartConfig::q(hi, n).unwrap();
                prop_assert!(!lq.signals(stat) || hq.signals(stat));
            }
        }
    }
}
