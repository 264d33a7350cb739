//! Per-query wall-clock timing of the monitoring statistic.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use depthwatch::charting::{select_model, CentralityModel, Feature};
use depthwatch::depth::DepthEvaluator;
use depthwatch::pipeline::{fit_query_models, FittedModels, PipelineConfig};
use depthwatch::reference::{EmbeddingRecord, RefClass};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingSample {
    pub method: String,
    /// Position among the timed queries.
    pub query: usize,
    /// Stream index of the queried record.
    pub index: usize,
    pub reference_size: usize,
    pub k: usize,
    pub nanos: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub method: String,
    pub count: usize,
    pub min: u64,
    pub median: u64,
    pub mean: f64,
    pub p95: u64,
    pub max: u64,
}

/// Nearest-rank percentile of sorted values: the `ceil(p·n)`-th smallest.
pub fn nearest_rank(sorted: &[u64], p: f64) -> u64 {
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Summaries in order of first appearance of each method.
pub fn summarize(samples: &[TimingSample]) -> Vec<TimingSummary> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for s in samples {
        if !groups.contains_key(s.method.as_str()) {
            order.push(&s.method);
        }
        groups.entry(&s.method).or_default().push(s.nanos);
    }
    order
        .into_iter()
        .map(|m| {
            let mut v = groups.remove(m).expect("grouped");
            v.sort_unstable();
            TimingSummary {
                method: m.to_string(),
                count: v.len(),
                min: v[0],
                median: nearest_rank(&v, 0.5),
                mean: v.iter().map(|&x| x as f64).sum::<f64>() / v.len() as f64,
                p95: nearest_rank(&v, 0.95),
                max: v[v.len() - 1],
            }
        })
        .collect()
}

fn time_queries<M>(
    label: &str,
    models: &BTreeMap<RefClass, M>,
    score: impl Fn(&M, &[f64]) -> depthwatch::Result<f64>,
    sizes: &BTreeMap<RefClass, usize>,
    queries: &[EmbeddingRecord],
    feature: Feature,
) -> CliResult<Vec<TimingSample>> {
    queries
        .iter()
        .enumerate()
        .map(|(q, record)| {
            let (class, model) = select_model(models, record.predicted_label)?;
            let x = feature.extract(record)?;
            let start = Instant::now();
            let c = score(model, &x)?;
            let nanos = start.elapsed().as_nanos() as u64;
            std::hint::black_box(c);
            Ok(TimingSample {
                method: label.to_string(),
                query: q,
                index: record.index,
                reference_size: sizes[&class],
                k: x.len(),
                nanos,
            })
        })
        .collect()
}

/// Times the centrality of each Phase II query (the first `limit`, if set)
/// under one method, on a single worker thread.
pub fn time_method(
    records: &[EmbeddingRecord],
    config: &PipelineConfig,
    limit: Option<usize>,
) -> CliResult<Vec<TimingSample>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        let fitted = fit_query_models(records, config)?;
        let queries = &fitted.stream[..limit.unwrap_or(usize::MAX).min(fitted.stream.len())];
        let sizes = fitted.models.reference_sizes();
        let label = config.method.label();
        match &fitted.models {
            FittedModels::Depth { spec, references } => {
                let evaluators = references
                    .iter()
                    .map(|(k, r)| Ok((*k, DepthEvaluator::new(r, spec)?)))
                    .collect::<depthwatch::Result<BTreeMap<_, _>>>()?;
                time_queries(&label, &evaluators, |e, x| e.depth(x), &sizes, queries, fitted.feature)
            }
            FittedModels::Benchmark(models) => {
                time_queries(&label, models, |m, x| m.centrality(x), &sizes, queries, fitted.feature)
            }
        }
    })
}

pub fn write_samples<W: Write>(writer: W, samples: &[TimingSample], path: &Path) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in samples {
        w.serialize(s)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(method: &str, nanos: u64) -> TimingSample {
        TimingSample {
            method: method.into(),
            query: 0,
            index: 0,
            reference_size: 1,
            k: 1,
            nanos,
        }
    }

    #[test]
    fn nearest_rank_order_statistics() {
        let v: Vec<u64> = (1..=20).collect();
        assert_eq!(nearest_rank(&v, 0.5), 10);
        assert_eq!(nearest_rank(&v, 0.95), 19);
        assert_eq!(nearest_rank(&v, 1.0), 20);
        assert_eq!(nearest_rank(&[7], 0.95), 7);
    }

    #[test]
    fn summary_groups_by_method() {
        let s: Vec<_> = [("B", 5), ("A", 1), ("B", 3), ("A", 2), ("B", 4)]
            .iter()
            .map(|(m, n)| sample(m, *n))
            .collect();
        let out = summarize(&s);
        assert_eq!(out[0].method, "B");
        assert_eq!((out[0].count, out[0].min, out[0].median, out[0].max), (3, 3, 4, 5));
        assert_eq!(out[1].mean, 1.5);
    }
}
