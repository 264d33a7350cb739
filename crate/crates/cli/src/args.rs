use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use depthwatch::charting::{ChartKind, InSampleRank};
use depthwatch::depth::CovarianceMode;

use crate::config::{parse_methods, ReferenceKind, RunConfig};
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(
    name = "depthwatch",
    version,
    about = "Depth-based control charts for embedding streams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the toy problem, train the network and monitor its embeddings.
    Toy(RunArgs),
    /// Monitor an embedding CSV given with --input.
    Monitor(RunArgs),
    /// Time the per-query statistic of each method.
    Timing(RunArgs),
    /// Repeat monitoring over random reference samples (--reference is ignored).
    Montecarlo(RunArgs),
    /// Write the toy embedding stream as CSV.
    Simulate(RunArgs),
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Toy(a)
            | Command::Monitor(a)
            | Command::Timing(a)
            | Command::Montecarlo(a)
            | Command::Simulate(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChartArg {
    R,
    Q,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err("alpha must lie in (0, 1)".into())
    }
}

/// Flags shared by every subcommand. Unset flags keep their defaults; a
/// `--config` file overrides both.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// False-alarm probability in (0, 1).
    #[arg(long, value_parser = parse_alpha)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum)]
    pub chart: Option<ChartArg>,
    /// Q chart batch size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Method label (MD, SD, HDr, PDa1..3, PD1..3, LOF, KDEOS, iForest, MDis, NOF) or `all`. Repeatable.
    #[arg(long = "method")]
    pub methods: Vec<String>,
    #[arg(long, value_enum)]
    pub reference: Option<ReferenceKind>,
    /// Reference size per class, or in total when merged.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also render each control chart as SVG.
    #[arg(long)]
    pub svg: bool,
    /// Rank Phase I points without counting themselves.
    #[arg(long)]
    pub leave_one_out: bool,
    /// Regularize singular covariance matrices instead of failing.
    #[arg(long)]
    pub ridge: bool,
    /// Monte Carlo repetitions.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Number of Phase II queries to time.
    #[arg(long)]
    pub queries: Option<usize>,
    /// JSON file whose fields override the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl RunArgs {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut c = RunConfig::default();
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.alpha {
            c.alpha = v;
        }
        if let Some(v) = self.chart {
            c.chart = match v {
                ChartArg::R => ChartKind::R,
                ChartArg::Q => ChartKind::Q,
            };
        }
        if let Some(v) = self.n {
            c.n = v;
        }
        if !self.methods.is_empty() {
            c.methods = Vec::new();
            for m in &self.methods {
                c.methods.extend(parse_methods(m)?);
            }
        }
        if let Some(v) = self.reference {
            c.reference = v;
        }
        if let Some(v) = self.size {
            c.size = v;
        }
        if self.input.is_some() {
            c.input = self.input.clone();
        }
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        c.svg |= self.svg;
        if self.leave_one_out {
            c.in_sample = InSampleRank::LeaveOneOut;
        }
        if self.ridge {
            c.covariance = CovarianceMode::Ridge;
        }
        if let Some(v) = self.runs {
            c.runs = v;
        }
        if self.queries.is_some() {
            c.queries = self.queries;
        }
        if let Some(path) = &self.config {
            c = c.merged_with_file(path)?;
        }
        c.validate()?;
        Ok(c)
    }
}
