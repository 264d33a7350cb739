//! CSV formats: the embedding stream and the chart signals.
//!
//! Embedding files carry the header
//! `index,phase,true_label,predicted_label,softmax_0..softmax_{v-1},e_0..e_{k-1}`.
//! `true_label` may be empty outside Phase I, and the softmax cells of a row
//! are either all empty or all filled.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use depthwatch::charting::SignalRecord;
use depthwatch::reference::{ClassId, EmbeddingRecord, Phase, RefClass};

use crate::error::{CliError, CliResult};

const FIXED: [&str; 4] = ["index", "phase", "true_label", "predicted_label"];
pub const SIGNAL_HEADER: [&str; 5] = ["index", "class_used", "statistic", "signal", "phase"];

struct Layout {
    softmax: usize,
    embedding: usize,
}

fn parse_header(header: &csv::StringRecord) -> Result<Layout, String> {
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < FIXED.len() || cols[..FIXED.len()] != FIXED {
        return Err(format!("header must start with {}", FIXED.join(",")));
    }
    let rest = &cols[FIXED.len()..];
    let softmax = rest.iter().take_while(|c| c.starts_with("softmax_")).count();
    for (i, c) in rest[..softmax].iter().enumerate() {
        if *c != format!("softmax_{i}") {
            return Err(format!("expected column softmax_{i}, found `{c}`"));
        }
    }
    let embedding = rest.len() - softmax;
    for (i, c) in rest[softmax..].iter().enumerate() {
        if *c != format!("e_{i}") {
            return Err(format!("expected column e_{i}, found `{c}`"));
        }
    }
    if embedding == 0 {
        return Err("no embedding columns".into());
    }
    Ok(Layout { softmax, embedding })
}

fn number<T: std::str::FromStr>(cell: &str, what: &str) -> Result<T, String> {
    cell.trim()
        .parse()
        .map_err(|_| format!("{what}: `{cell}` is not a valid number"))
}

fn parse_row(row: &csv::StringRecord, layout: &Layout) -> Result<EmbeddingRecord, String> {
    let width = FIXED.len() + layout.softmax + layout.embedding;
    if row.len() != width {
        return Err(format!("expected {width} fields, found {}", row.len()));
    }
    let index = number(&row[0], "index")?;
    let phase: Phase = row[1]
        .trim()
        .parse()
        .map_err(|_| format!("unknown phase `{}`", &row[1]))?;
    let true_label = match row[2].trim() {
        "" => None,
        c => Some(ClassId(number(c, "true_label")?)),
    };
    let predicted_label = ClassId(number(&row[3], "predicted_label")?);
    let soft: Vec<&str> = (0..layout.softmax).map(|i| row[FIXED.len() + i].trim()).collect();
    let softmax = if soft.iter().all(|c| c.is_empty()) {
        None
    } else {
        Some(
            soft.iter()
                .enumerate()
                .map(|(i, c)| number(c, &format!("softmax_{i}")))
                .collect::<Result<Vec<f64>, _>>()?,
        )
    };
    let start = FIXED.len() + layout.softmax;
    let embedding = (0..layout.embedding)
        .map(|i| number(&row[start + i], &format!("e_{i}")))
        .collect::<Result<Vec<f64>, _>>()?;
    let record = EmbeddingRecord {
        index,
        embedding,
        true_label,
        predicted_label,
        softmax,
        phase,
    };
    record.validate().map_err(|e| e.to_string())?;
    Ok(record)
}

/// Reads an embedding stream. Errors carry the 1-based line number.
pub fn read_embeddings<R: Read>(reader: R, path: &Path) -> CliResult<Vec<EmbeddingRecord>> {
    let parse_err = |line: u64, message: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.is_empty() {
        return Err(parse_err(1, "missing header".into()));
    }
    let layout = parse_header(&header).map_err(|m| parse_err(1, m))?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        out.push(parse_row(&row, &layout).map_err(|m| parse_err(line, m))?);
    }
    Ok(out)
}

pub fn parse_embeddings_csv(path: &Path) -> CliResult<Vec<EmbeddingRecord>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_embeddings(file, path)
}

fn io_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::io(path, source),
        other => CliError::Config(format!("{}: {other:?}", path.display())),
    }
}

/// Writes records in the embedding schema. `v` is the widest softmax vector.
pub fn write_embeddings<W: Write>(writer: W, records: &[EmbeddingRecord], path: &Path) -> CliResult<()> {
    let k = records.first().map_or(0, |r| r.embedding.len());
    let v = records
        .iter()
        .filter_map(|r| r.softmax.as_ref().map(Vec::len))
        .max()
        .unwrap_or(0);
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = FIXED.iter().map(|s| s.to_string()).collect();
    header.extend((0..v).map(|i| format!("softmax_{i}")));
    header.extend((0..k).map(|i| format!("e_{i}")));
    w.write_record(&header).map_err(io_err(path))?;
    for r in records {
        let mut row = vec![
            r.index.to_string(),
            r.phase.token().to_string(),
            r.true_label.map_or(String::new(), |c| c.0.to_string()),
            r.predicted_label.0.to_string(),
        ];
        match &r.softmax {
            Some(s) => row.extend((0..v).map(|i| s.get(i).map_or(String::new(), f64::to_string))),
            None => row.extend((0..v).map(|_| String::new())),
        }
        row.extend(r.embedding.iter().map(f64::to_string));
        w.write_record(&row).map_err(io_err(path))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes Phase I rows followed by Phase II rows.
pub fn write_signals<W: Write>(writer: W, signals: &[SignalRecord], path: &Path) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SIGNAL_HEADER).map_err(io_err(path))?;
    for s in signals {
        w.write_record([
            s.index.to_string(),
            s.class_used.to_string(),
            s.statistic.to_string(),
            u8::from(s.signal).to_string(),
            s.phase.token().to_string(),
        ])
        .map_err(io_err(path))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_signals<R: Read>(reader: R, path: &Path) -> CliResult<Vec<SignalRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let parse = || -> Result<SignalRecord, String> {
            Ok(SignalRecord {
                index: number(&row[0], "index")?,
                class_used: row[1].parse::<RefClass>().map_err(|e| e.to_string())?,
                statistic: number(&row[2], "statistic")?,
                signal: number::<u8>(&row[3], "signal")? == 1,
                phase: row[4].parse().map_err(|_| format!("unknown phase `{}`", &row[4]))?,
            })
        };
        out.push(parse().map_err(|message| CliError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        })?);
    }
    Ok(out)
}
