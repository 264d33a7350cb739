//! Phase I reference construction followed by Phase II monitoring, for a
//! depth function or a benchmark scorer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::benchmarks::{BenchmarkMethod, CentralityScorer};
use crate::charting::{
    depth_models, monitor_with, phase1_signals, CentralityModel, ChartConfig, Feature, InSampleRank, SignalRecord,
};
use crate::depth::{CovarianceMode, DepthSpec, PointSet, ReferenceSet};
use crate::metrics::MonitoringReport;
use crate::reference::{
    select_by_confidence, select_merged, select_random, validate_phase1, ClassId, EmbeddingRecord, Phase, RefClass,
};
use crate::{Error, Result};

/// A centrality function: a data depth or a benchmark outlyingness score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Depth(DepthSpec),
    Benchmark(BenchmarkMethod),
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Depth(s) => s.label(),
            Method::Benchmark(b) => b.label().to_string(),
        }
    }

    /// Every depth notion followed by every benchmark, with defaults.
    pub fn all() -> Vec<Self> {
        DepthSpec::all()
            .into_iter()
            .map(Method::Depth)
            .chain(BenchmarkMethod::all().into_iter().map(Method::Benchmark))
            .collect()
    }

    pub fn feature(&self) -> Feature {
        match self {
            Method::Depth(_) => Feature::Embedding,
            Method::Benchmark(b) => b.feature(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<DepthSpec>()
            .map(Method::Depth)
            .or_else(|_| s.parse::<BenchmarkMethod>().map(Method::Benchmark))
            .map_err(|_| Error::InvalidParameter(format!("unknown method `{s}`")))
    }
}

/// How Phase I reference samples are drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum ReferenceStrategy {
    /// Per class, the most confident correctly classified records.
    #[default]
    Confidence,
    /// Per class, a uniform random sample; class `c` uses `seed + c`.
    Random { seed: u64 },
    /// One class-balanced sample shared by all predicted classes.
    Merged,
}

impl ReferenceStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Confidence => "confidence",
            Self::Random { .. } => "random",
            Self::Merged => "merged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub method: Method,
    pub reference: ReferenceStrategy,
    /// Reference size per class, or in total for the merged strategy.
    pub size: usize,
    pub chart: ChartConfig,
    pub in_sample: InSampleRank,
    pub covariance: CovarianceMode,
}

/// Phase I and Phase II chart output with the derived rates.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub phase1: Vec<SignalRecord>,
    pub phase2: Vec<SignalRecord>,
    /// Aligned with `phase2`. For the Q chart a batch counts as misclassified
    /// when any member is.
    pub misclassified: Vec<Option<bool>>,
    pub report: MonitoringReport,
    /// Phase I records dropped because they were misclassified.
    pub removed_phase1: usize,
    /// Set when a NOF natural-neighbor search ran to its cap.
    pub capped_natural_neighbors: bool,
}

/// Reference samples per model key, in stream order.
pub fn select_references<'a>(
    phase1: &'a [EmbeddingRecord],
    strategy: ReferenceStrategy,
    size: usize,
) -> Result<BTreeMap<RefClass, Vec<&'a EmbeddingRecord>>> {
    if strategy == ReferenceStrategy::Merged {
        return Ok(BTreeMap::from([(RefClass::Merged, select_merged(phase1, size)?)]));
    }
    let classes: BTreeSet<ClassId> = phase1.iter().filter_map(|r| r.true_label).collect();
    classes
        .into_iter()
        .map(|c| {
            let chosen = match strategy {
                ReferenceStrategy::Random { seed } => {
                    select_random(phase1, c, size, seed.wrapping_add(u64::from(c.0)))?
                }
                _ => select_by_confidence(phase1, c, size)?,
            };
            Ok((RefClass::Class(c), chosen))
        })
        .collect()
}

fn rows_of(chosen: &[&EmbeddingRecord], feature: Feature) -> Result<Vec<Vec<f64>>> {
    chosen.iter().map(|r| feature.extract(r)).collect()
}

/// Misclassification flag of each emitted chart point.
fn chart_mask(stream: &[EmbeddingRecord], chart: &ChartConfig) -> Vec<Option<bool>> {
    stream
        .chunks_exact(chart.batch_size)
        .map(|batch| {
            let flags: Vec<Option<bool>> = batch.iter().map(EmbeddingRecord::is_misclassified).collect();
            if flags.contains(&Some(true)) {
                Some(true)
            } else if flags.iter().all(Option::is_none) {
                None
            } else {
                Some(false)
            }
        })
        .collect()
}

fn charts<M: CentralityModel>(
    models: &BTreeMap<RefClass, M>,
    stream: &[EmbeddingRecord],
    feature: Feature,
    config: &PipelineConfig,
) -> Result<(Vec<SignalRecord>, Vec<SignalRecord>)> {
    let phase1 = phase1_signals(models, &config.chart, config.in_sample);
    let phase2 = monitor_with(stream, models, feature, &config.chart)?;
    Ok((phase1, phase2))
}

/// Per-class centrality models fitted on Phase I reference samples.
pub enum FittedModels {
    Depth {
        spec: DepthSpec,
        references: BTreeMap<RefClass, ReferenceSet>,
    },
    Benchmark(BTreeMap<RefClass, CentralityScorer>),
}

impl FittedModels {
    /// Set when a NOF natural-neighbor search ran to its cap.
    pub fn capped_natural_neighbors(&self) -> bool {
        match self {
            FittedModels::Depth { .. } => false,
            FittedModels::Benchmark(models) => models.values().any(|m| m.natural_neighbors().is_some_and(|n| n.capped)),
        }
    }

    /// Reference size per model key.
    pub fn reference_sizes(&self) -> BTreeMap<RefClass, usize> {
        match self {
            FittedModels::Depth { references, .. } => references.iter().map(|(k, r)| (*k, r.len())).collect(),
            FittedModels::Benchmark(models) => models.iter().map(|(k, m)| (*k, m.reference_indices().len())).collect(),
        }
    }
}

/// Phase I output of the pipeline: fitted models plus the stream to monitor.
pub struct Fitted {
    pub models: FittedModels,
    pub feature: Feature,
    /// Every record not tagged [`Phase::PhaseI`], in stream order.
    pub stream: Vec<EmbeddingRecord>,
    /// Phase I records dropped because they were misclassified.
    pub removed_phase1: usize,
}

/// Validates the records, selects references and fits one model per class.
pub fn fit_models(records: &[EmbeddingRecord], config: &PipelineConfig) -> Result<Fitted> {
    fit(records, config, true)
}

/// Like [`fit_models`] but skips the in-sample depths of the reference
/// sets. The models can score queries but not rank them.
pub fn fit_query_models(records: &[EmbeddingRecord], config: &PipelineConfig) -> Result<Fitted> {
    fit(records, config, false)
}

fn fit(records: &[EmbeddingRecord], config: &PipelineConfig, cache_depths: bool) -> Result<Fitted> {
    let (phase1_records, stream): (Vec<EmbeddingRecord>, Vec<EmbeddingRecord>) =
        records.iter().cloned().partition(|r| r.phase == Phase::PhaseI);
    for r in &stream {
        r.validate()?;
    }
    let validated = validate_phase1(&phase1_records)?;
    let selected = select_references(&validated.kept, config.reference, config.size)?;
    let feature = config.method.feature();

    let models = match config.method {
        Method::Depth(spec) => {
            let references = selected
                .iter()
                .map(|(k, chosen)| {
                    let rows = rows_of(chosen, feature)?;
                    let indices = chosen.iter().map(|r| r.index).collect();
                    let set = ReferenceSet::with_options(*k, rows, indices, config.covariance)?;
                    Ok((
                        *k,
                        if cache_depths {
                            set.with_depth_cache(&spec)?
                        } else {
                            set
                        },
                    ))
                })
                .collect::<Result<_>>()?;
            FittedModels::Depth { spec, references }
        }
        Method::Benchmark(method) => FittedModels::Benchmark(
            selected
                .iter()
                .map(|(k, chosen)| {
                    let points = PointSet::new(&rows_of(chosen, feature)?)?;
                    let indices = chosen.iter().map(|r| r.index).collect();
                    Ok((*k, CentralityScorer::fit(method, &points, indices)?))
                })
                .collect::<Result<_>>()?,
        ),
    };
    Ok(Fitted {
        models,
        feature,
        stream,
        removed_phase1: validated.removed,
    })
}

/// Runs Phase I (validation, reference selection, in-sample centrality,
/// false-alarm rate) and Phase II (monitoring and rates) over a stream.
///
/// Phase I records are those tagged [`Phase::PhaseI`]; every other record is
/// monitored in stream order.
pub fn run_pipeline(records: &[EmbeddingRecord], config: &PipelineConfig) -> Result<PipelineOutput> {
    let fitted = fit_models(records, config)?;
    let (phase1, phase2) = match &fitted.models {
        FittedModels::Depth { spec, references } => {
            let models = depth_models(references, spec)?;
            charts(&models, &fitted.stream, fitted.feature, config)?
        }
        FittedModels::Benchmark(models) => charts(models, &fitted.stream, fitted.feature, config)?,
    };
    let misclassified = chart_mask(&fitted.stream, &config.chart);
    let report = MonitoringReport::from_signals(&phase1, &phase2, &misclassified);
    Ok(PipelineOutput {
        phase1,
        phase2,
        misclassified,
        report,
        removed_phase1: fitted.removed_phase1,
        capped_natural_neighbors: fitted.models.capped_natural_neighbors(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_labels_round_trip() {
        for m in Method::all() {
            assert_eq!(m.label().parse::<Method>().unwrap(), m);
        }
        assert!("nope".parse::<Method>().is_err());
    }

    fn rec(index: usize, class: u32, predicted: u32, phase: Phase, x: f64) -> EmbeddingRecord {
        let p = if predicted == 1 { 0.9 } else { 0.1 };
        EmbeddingRecord {
            index,
            embedding: vec![x + class as f64 * 10.0, (x * 7.3).sin()],
            true_label: Some(ClassId(class)),
            predicted_label: ClassId(predicted),
            softmax: Some(vec![1.0 - p, p]),
            phase,
        }
    }

    #[test]
    fn q_chart_mask_flags_any_misclassified_member() {
        let stream: Vec<_> = (0..10)
            .map(|i| rec(i, 0, u32::from(i == 7), Phase::PhaseIIInControl, 0.0))
            .collect();
        let chart = ChartConfig::q(0.05, 5).unwrap();
        assert_eq!(chart_mask(&stream, &chart), vec![Some(false), Some(true)]);
    }

    #[test]
    fn misclassified_phase1_records_are_dropped() {
        let mut records: Vec<_> = (0..40)
            .map(|i| rec(i, (i % 2) as u32, (i % 2) as u32, Phase::PhaseI, i as f64 * 0.1))
            .collect();
        records[3].predicted_label = ClassId(0);
        records.extend((40..50).map(|i| rec(i, 0, 0, Phase::PhaseIIInControl, 0.5)));
        let config = PipelineConfig {
            method: Method::Depth(DepthSpec::mahalanobis()),
            reference: ReferenceStrategy::Confidence,
            size: 15,
            chart: ChartConfig::r(0.1).unwrap(),
            in_sample: InSampleRank::Inclusive,
            covariance: CovarianceMode::Strict,
        };
        let out = run_pipeline(&records, &config).unwrap();
        assert_eq!(out.removed_phase1, 1);
        assert_eq!(out.phase1.len(), 30);
        assert_eq!(out.phase2.len(), 10);
        assert!(out.phase1.iter().all(|s| s.index != 3));
        let too_big = PipelineConfig { size: 20, ..config };
        assert!(matches!(
            run_pipeline(&records, &too_big),
            Err(Error::InsufficientRecords { .. })
        ));
    }
}
