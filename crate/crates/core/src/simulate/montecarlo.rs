//! Repeated pipeline runs with fresh random reference samples.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pipeline::{run_pipeline, Method, PipelineConfig, ReferenceStrategy};
use crate::reference::EmbeddingRecord;
use crate::{Error, Result};

/// Mean and sample standard deviation of one rate across runs. Runs where
/// the rate is undefined are left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub values: Vec<Option<f64>>,
}

impl MetricSummary {
    pub fn from_values(values: Vec<Option<f64>>) -> Self {
        let present: Vec<f64> = values.iter().flatten().copied().collect();
        let n = present.len();
        let mean = (n > 0).then(|| present.iter().sum::<f64>() / n as f64);
        let std = mean
            .filter(|_| n > 1)
            .map(|m| (present.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
        Self { mean, std, values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub method: String,
    pub runs: usize,
    pub far: MetricSummary,
    pub sr: MetricSummary,
    pub cdr: MetricSummary,
}

/// Runs the pipeline once per entry of `run_seeds` and method, drawing each
/// run's reference samples at random with that run's seed. Everything else
/// comes from `config`. Runs execute in parallel; results are ordered by run.
pub fn monte_carlo_study(
    records: &[EmbeddingRecord],
    methods: &[Method],
    config: &PipelineConfig,
    run_seeds: &[u64],
) -> Result<Vec<MonteCarloSummary>> {
    if run_seeds.len() < 2 {
        return Err(Error::InvalidParameter(
            "a Monte Carlo study needs at least two runs".into(),
        ));
    }
    methods
        .iter()
        .map(|&method| {
            let reports = run_seeds
                .par_iter()
                .map(|&seed| {
                    let cfg = PipelineConfig {
                        method,
                        reference: ReferenceStrategy::Random { seed },
                        ..*config
                    };
                    run_pipeline(records, &cfg).map(|o| o.report)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MonteCarloSummary {
                method: method.label(),
                runs: run_seeds.len(),
                far: MetricSummary::from_values(reports.iter().map(|r| r.far).collect()),
                sr: MetricSummary::from_values(reports.iter().map(|r| r.sr_weighted).collect()),
                cdr: MetricSummary::from_values(reports.iter().map(|r| r.cdr).collect()),
            })
        })
        .collect()
}

/// `runs` consecutive seeds starting at `seed`.
pub fn run_seeds(seed: u64, runs: usize) -> Vec<u64> {
    (0..runs as u64).map(|i| seed.wrapping_add(i)).collect()
}
