use std::path::{Path, PathBuf};

use depthwatch::charting::{ChartConfig, ChartKind, InSampleRank};
use depthwatch::depth::CovarianceMode;
use depthwatch::pipeline::{Method, PipelineConfig, ReferenceStrategy};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Reference selection as named on the command line. The random strategy
/// draws with the run seed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    #[default]
    Confidence,
    Random,
    Merged,
}

/// Everything a subcommand needs, after flags and the config file are merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub alpha: f64,
    pub chart: ChartKind,
    /// Batch size of the Q chart; ignored by the r chart.
    pub n: usize,
    #[serde(deserialize_with = "methods_from_labels_or_objects")]
    pub methods: Vec<Method>,
    pub reference: ReferenceKind,
    /// Reference size per class, or in total when merged.
    pub size: usize,
    pub in_sample: InSampleRank,
    pub covariance: CovarianceMode,
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub svg: bool,
    /// Monte Carlo repetitions.
    pub runs: usize,
    /// Cap on the number of timed queries; all Phase II records when absent.
    pub queries: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            alpha: 0.05,
            chart: ChartKind::R,
            n: 5,
            methods: Method::all(),
            reference: ReferenceKind::Confidence,
            size: 100,
            in_sample: InSampleRank::Inclusive,
            covariance: CovarianceMode::Strict,
            input: None,
            out: PathBuf::from("out"),
            svg: false,
            runs: 10,
            queries: None,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MethodEntry {
    Label(String),
    Full(Method),
}

fn methods_from_labels_or_objects<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Method>, D::Error> {
    let entries = Vec::<MethodEntry>::deserialize(d)?;
    let mut out = Vec::new();
    for e in entries {
        match e {
            MethodEntry::Full(m) => out.push(m),
            MethodEntry::Label(l) => out.extend(parse_methods(&l).map_err(serde::de::Error::custom)?),
        }
    }
    Ok(out)
}

/// Parses a method label, or `all` for every method with defaults.
pub fn parse_methods(label: &str) -> CliResult<Vec<Method>> {
    if label.eq_ignore_ascii_case("all") {
        return Ok(Method::all());
    }
    Ok(vec![label.parse::<Method>()?])
}

impl RunConfig {
    pub fn chart_config(&self) -> CliResult<ChartConfig> {
        Ok(match self.chart {
            ChartKind::R => ChartConfig::r(self.alpha)?,
            ChartKind::Q => ChartConfig::q(self.alpha, self.n)?,
        })
    }

    pub fn strategy(&self) -> ReferenceStrategy {
        match self.reference {
            ReferenceKind::Confidence => ReferenceStrategy::Confidence,
            ReferenceKind::Random => ReferenceStrategy::Random { seed: self.seed },
            ReferenceKind::Merged => ReferenceStrategy::Merged,
        }
    }

    pub fn pipeline(&self, method: Method) -> CliResult<PipelineConfig> {
        Ok(PipelineConfig {
            method,
            reference: self.strategy(),
            size: self.size,
            chart: self.chart_config()?,
            in_sample: self.in_sample,
            covariance: self.covariance,
        })
    }

    pub fn validate(&self) -> CliResult<()> {
        self.chart_config()?;
        if self.methods.is_empty() {
            return Err(CliError::Config("at least one method is required".into()));
        }
        if self.size == 0 {
            return Err(CliError::Config("size must be at least 1".into()));
        }
        if self.queries == Some(0) {
            return Err(CliError::Config("queries must be at least 1".into()));
        }
        Ok(())
    }

    /// Canonical JSON form; [`RunConfig::parse`] reads it back unchanged.
    pub fn render(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Replaces every field present in the JSON object `overrides`.
    pub fn merged_with(&self, overrides: &Value) -> CliResult<Self> {
        let Value::Object(fields) = overrides else {
            return Err(CliError::Config("config file must hold a JSON object".into()));
        };
        let mut base = serde_json::to_value(self).expect("config serializes");
        let target = base.as_object_mut().expect("config is an object");
        for (k, v) in fields {
            target.insert(k.clone(), v.clone());
        }
        serde_json::from_value(base).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn merged_with_file(&self, path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        self.merged_with(&value)
    }
}
