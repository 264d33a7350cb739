use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use depthwatch::metrics::MonitoringReport;
use depthwatch::pipeline::{run_pipeline, PipelineConfig, PipelineOutput};
use depthwatch::reference::EmbeddingRecord;
use depthwatch::simulate::{monte_carlo_study, run_seeds, run_toy as simulate_toy, MonteCarloSummary, ToyConfig};
use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{parse_embeddings_csv, write_embeddings, write_signals};
use crate::svg::render_chart;
use crate::timing::{summarize, time_method, write_samples, TimingSample, TimingSummary};

pub const DATASET_FILE: &str = "dataset.csv";
pub const CONFIG_FILE: &str = "config.json";
pub const TIMING_FILE: &str = "timing.csv";
pub const TIMING_SUMMARY_FILE: &str = "timing_summary.json";
pub const MONTE_CARLO_FILE: &str = "montecarlo.json";

/// Report file contents for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub config: RunConfig,
    pub pipeline: PipelineConfig,
    pub lcl: f64,
    pub report: MonitoringReport,
    pub removed_phase1: usize,
    pub capped_natural_neighbors: bool,
}

pub fn signals_file(label: &str) -> String {
    format!("{label}.signals.csv")
}

pub fn report_file(label: &str) -> String {
    format!("{label}.report.json")
}

pub fn svg_file(label: &str) -> String {
    format!("{label}.svg")
}

pub fn run(command: &Command) -> CliResult<()> {
    let config = command.args().resolve()?;
    match command {
        Command::Toy(_) => run_toy(&config).map(|_| ()),
        Command::Monitor(_) => {
            let path = config
                .input
                .as_ref()
                .ok_or_else(|| CliError::Usage("monitor needs --input".into()))?;
            let records = parse_embeddings_csv(path)?;
            run_monitor(&records, &config).map(|_| ())
        }
        Command::Timing(_) => {
            let records = load_records(&config)?;
            run_timing(&records, &config).map(|_| ())
        }
        Command::Montecarlo(_) => {
            let records = load_records(&config)?;
            run_montecarlo(&records, &config).map(|_| ())
        }
        Command::Simulate(_) => {
            prepare_out(&config)?;
            let records = toy_records(config.seed)?;
            write_dataset(&config.out, &records)?;
            println!(
                "wrote {} records to {}",
                records.len(),
                config.out.join(DATASET_FILE).display()
            );
            Ok(())
        }
    }
}

fn prepare_out(config: &RunConfig) -> CliResult<()> {
    fs::create_dir_all(&config.out).map_err(|e| CliError::io(&config.out, e))?;
    write_file(&config.out.join(CONFIG_FILE), |w| {
        w.write_all(config.render().as_bytes())
            .map_err(|e| CliError::io(CONFIG_FILE, e))
    })
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> CliResult<()>) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    write_file(path, |w| {
        w.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
    })
}

fn write_dataset(out: &Path, records: &[EmbeddingRecord]) -> CliResult<PathBuf> {
    let path = out.join(DATASET_FILE);
    write_file(&path, |w| write_embeddings(w, records, &path))?;
    Ok(path)
}

fn toy_records(seed: u64) -> CliResult<Vec<EmbeddingRecord>> {
    Ok(simulate_toy(&ToyConfig::default(), seed)?.records)
}

/// Records from `--input`, or the toy stream for the configured seed.
pub fn load_records(config: &RunConfig) -> CliResult<Vec<EmbeddingRecord>> {
    match &config.input {
        Some(path) => parse_embeddings_csv(path),
        None => toy_records(config.seed),
    }
}

fn fmt_rate(r: Option<f64>) -> String {
    r.map_or_else(|| "  -  ".to_string(), |v| format!("{v:.3}"))
}

/// Runs every configured method over `records` and writes its signals CSV,
/// report JSON and, if requested, SVG chart.
pub fn run_monitor(records: &[EmbeddingRecord], config: &RunConfig) -> CliResult<Vec<MethodReport>> {
    prepare_out(config)?;
    let mut reports = Vec::new();
    println!(
        "{:<8} {:>6} {:>6} {:>6} {:>6} {:>6}",
        "method", "FAR", "SR", "CDR", "SR|M", "SR|C"
    );
    for &method in &config.methods {
        let pipeline = config.pipeline(method)?;
        let label = method.label();
        let out: PipelineOutput = run_pipeline(records, &pipeline)?;

        let path = config.out.join(signals_file(&label));
        let all: Vec<_> = out.phase1.iter().chain(&out.phase2).cloned().collect();
        write_file(&path, |w| write_signals(w, &all, &path))?;
        if config.svg {
            let svg = render_chart(
                &format!("{label} {:?} chart", pipeline.chart.kind),
                &out.phase1,
                &out.phase2,
                &out.misclassified,
                pipeline.chart.lcl,
            );
            let path = config.out.join(svg_file(&label));
            write_file(&path, |w| {
                w.write_all(svg.as_bytes()).map_err(|e| CliError::io(&path, e))
            })?;
        }
        let report = MethodReport {
            method: label.clone(),
            config: config.clone(),
            pipeline,
            lcl: pipeline.chart.lcl,
            report: out.report,
            removed_phase1: out.removed_phase1,
            capped_natural_neighbors: out.capped_natural_neighbors,
        };
        write_json(&config.out.join(report_file(&label)), &report)?;
        let r = &report.report;
        println!(
            "{label:<8} {:>6} {:>6} {:>6} {:>6} {:>6}",
            fmt_rate(r.far),
            fmt_rate(r.sr_weighted),
            fmt_rate(r.cdr),
            fmt_rate(r.sr_given_misclassified),
            fmt_rate(r.sr_given_correct)
        );
        if report.capped_natural_neighbors {
            eprintln!("warning: {label}: natural-neighbor search reached its cap");
        }
        reports.push(report);
    }
    Ok(reports)
}

/// Generates, trains and monitors the toy problem; also writes the dataset.
pub fn run_toy(config: &RunConfig) -> CliResult<Vec<MethodReport>> {
    prepare_out(config)?;
    let records = toy_records(config.seed)?;
    write_dataset(&config.out, &records)?;
    run_monitor(&records, config)
}

pub fn run_timing(
    records: &[EmbeddingRecord],
    config: &RunConfig,
) -> CliResult<(Vec<TimingSample>, Vec<TimingSummary>)> {
    prepare_out(config)?;
    let mut samples = Vec::new();
    for &method in &config.methods {
        samples.extend(time_method(records, &config.pipeline(method)?, config.queries)?);
    }
    let path = config.out.join(TIMING_FILE);
    write_file(&path, |w| write_samples(w, &samples, &path))?;
    let summary = summarize(&samples);
    write_json(&config.out.join(TIMING_SUMMARY_FILE), &summary)?;
    println!(
        "{:<8} {:>6} {:>12} {:>12} {:>14} {:>12} {:>12}",
        "method", "count", "min ns", "median ns", "mean ns", "p95 ns", "max ns"
    );
    for s in &summary {
        println!(
            "{:<8} {:>6} {:>12} {:>12} {:>14.1} {:>12} {:>12}",
            s.method, s.count, s.min, s.median, s.mean, s.p95, s.max
        );
    }
    Ok((samples, summary))
}

pub fn run_montecarlo(records: &[EmbeddingRecord], config: &RunConfig) -> CliResult<Vec<MonteCarloSummary>> {
    prepare_out(config)?;
    let base = config.pipeline(config.methods[0])?;
    let seeds = run_seeds(config.seed, config.runs);
    let summary = monte_carlo_study(records, &config.methods, &base, &seeds)?;
    write_json(&config.out.join(MONTE_CARLO_FILE), &summary)?;
    let cell = |m: &depthwatch::simulate::MetricSummary| match (m.mean, m.std) {
        (Some(a), Some(s)) => format!("{a:.3} ({s:.3})"),
        _ => "-".to_string(),
    };
    println!("{:<8} {:>15} {:>15} {:>15}", "method", "FAR", "SR", "CDR");
    for s in &summary {
        println!(
            "{:<8} {:>15} {:>15} {:>15}",
            s.method,
            cell(&s.far),
            cell(&s.sr),
            cell(&s.cdr)
        );
    }
    Ok(summary)
}
