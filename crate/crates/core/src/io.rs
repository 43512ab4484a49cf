//! CSV formats. Every float is written in the shortest form that parses back
//! to the same value, so round trips are exact and output is deterministic.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::agent::EnsembleTrace;
use crate::dist::WealthDistribution;
use crate::error::{Error, Result};
use crate::grid::{Spacing, WealthGrid};
use crate::lorenz::LorenzCurve;
use crate::trace::{GiniRecord, GiniTrace};

pub const DISTRIBUTION_HEADER: [&str; 2] = ["w", "P"];
pub const LORENZ_HEADER: [&str; 2] = ["F", "L"];
pub const TRACE_HEADER: [&str; 5] = ["t", "G", "N", "W", "dGdt"];
pub const AGGREGATE_HEADER: [&str; 3] = ["t", "G_mean", "G_stderr"];
pub const SNAPSHOT_HEADER: [&str; 2] = ["agent_id", "w"];

fn write_rows<W: Write, const K: usize>(
    out: W,
    header: [&str; K],
    rows: impl Iterator<Item = [String; K]>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<File> {
    Ok(File::create(path)?)
}

pub fn write_distribution<W: Write>(out: W, dist: &WealthDistribution) -> Result<()> {
    let rows = dist.grid().nodes().iter().zip(dist.density()).map(|(w, p)| [w.to_string(), p.to_string()]);
    write_rows(out, DISTRIBUTION_HEADER, rows)
}

pub fn write_lorenz<W: Write>(out: W, curve: &LorenzCurve) -> Result<()> {
    write_rows(out, LORENZ_HEADER, curve.points().iter().map(|(f, l)| [f.to_string(), l.to_string()]))
}

pub fn write_trace<W: Write>(out: W, trace: &GiniTrace) -> Result<()> {
    let rows = trace.records().iter().map(|r| {
        [r.t.to_string(), r.g.to_string(), r.n.to_string(), r.w.to_string(), r.dgdt.to_string()]
    });
    write_rows(out, TRACE_HEADER, rows)
}

pub fn write_aggregate<W: Write>(out: W, ensemble: &EnsembleTrace) -> Result<()> {
    let rows = (0..ensemble.t.len())
        .map(|k| [ensemble.t[k].to_string(), ensemble.g_mean[k].to_string(), ensemble.g_stderr[k].to_string()]);
    write_rows(out, AGGREGATE_HEADER, rows)
}

pub fn write_snapshot<W: Write>(out: W, wealths: &[f64]) -> Result<()> {
    write_rows(out, SNAPSHOT_HEADER, wealths.iter().enumerate().map(|(i, w)| [i.to_string(), w.to_string()]))
}

pub fn save_distribution(path: &Path, dist: &WealthDistribution) -> Result<()> {
    write_distribution(create(path)?, dist)
}

pub fn save_trace(path: &Path, trace: &GiniTrace) -> Result<()> {
    write_trace(create(path)?, trace)
}

fn parse_field(value: &str, row: usize, column: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("row {row}: column `{column}` is not a number: {value:?}")))
}

/// Rows of a headed CSV, checked against `header`. Row numbers count the
/// header as row 1.
fn read_table<R: Read>(input: R, header: &[&str]) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let found: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        return Err(Error::Parse(format!("expected header {}, found {}", header.join(","), found.join(","))));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse(format!("row {row}: {e}")))?;
        let values = record
            .iter()
            .zip(header)
            .map(|(v, c)| parse_field(v, row, c))
            .collect::<Result<Vec<f64>>>()?;
        rows.push((row, values));
    }
    Ok(rows)
}

fn detect_spacing(nodes: &[f64]) -> Spacing {
    let h0 = nodes[1] - nodes[0];
    let uniform = nodes.windows(2).all(|p| ((p[1] - p[0]) - h0).abs() <= 1e-9 * h0.max(p[1].abs() * 1e-7));
    if uniform {
        Spacing::Linear
    } else {
        Spacing::LogWithZeroCell
    }
}

pub fn read_distribution<R: Read>(input: R) -> Result<WealthDistribution> {
    let rows = read_table(input, &DISTRIBUTION_HEADER)?;
    let (nodes, density): (Vec<f64>, Vec<f64>) = rows.into_iter().map(|(_, v)| (v[0], v[1])).unzip();
    if nodes.len() < 2 {
        return Err(Error::Parse(format!("need at least two nodes, got {}", nodes.len())));
    }
    let spacing = detect_spacing(&nodes);
    let grid = Arc::new(WealthGrid::from_nodes(nodes, spacing)?);
    WealthDistribution::new(grid, density)
}

pub fn read_trace<R: Read>(input: R) -> Result<GiniTrace> {
    let rows = read_table(input, &TRACE_HEADER)?;
    let mut trace = GiniTrace::new();
    for (row, v) in rows {
        trace
            .push(GiniRecord { t: v[0], g: v[1], n: v[2], w: v[3], dgdt: v[4] })
            .map_err(|e| Error::Parse(format!("row {row}: {e}")))?;
    }
    Ok(trace)
}

pub fn load_distribution(path: &Path) -> Result<WealthDistribution> {
    read_distribution(File::open(path)?)
}

pub fn load_trace(path: &Path) -> Result<GiniTrace> {
    read_trace(File::open(path)?)
}

/// Wealth samples, one per line. A first line reading `w` is taken as a
/// header; blank lines are skipped. Line numbers in errors are 1-based.
pub fn read_samples<R: Read>(mut input: R) -> Result<Vec<f64>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let field = line.trim();
        if field.is_empty() || (row == 1 && field.eq_ignore_ascii_case("w")) {
            continue;
        }
        let w = field
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("row {row}: not a number: {field:?}")))?;
        if !w.is_finite() {
            return Err(Error::Parse(format!("row {row}: non-finite wealth {field}")));
        }
        if w < 0.0 {
            return Err(Error::Parse(format!("row {row}: negative wealth {w}")));
        }
        out.push(w);
    }
    if out.is_empty() {
        return Err(Error::Parse("no wealth samples found".into()));
    }
    Ok(out)
}

pub fn load_samples(path: &Path) -> Result<Vec<f64>> {
    read_samples(File::open(path)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinningManifest {
    pub samples: usize,
    pub nodes: usize,
    pub w_max: f64,
    pub sample_mean: f64,
    /// Wealth of the binned density over agents, equal to `sample_mean` up
    /// to rounding since linear sharing preserves the first moment.
    pub binned_mean: f64,
}

/// Bins samples onto `grid` by linear sharing between the two enclosing
/// nodes, which keeps both the agent count and total wealth. Each sample
/// counts as one agent.
pub fn bin_samples(samples: &[f64], grid: Arc<WealthGrid>) -> Result<(WealthDistribution, BinningManifest)> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    let mut mass = vec![0.0; grid.len()];
    for (i, &w) in samples.iter().enumerate() {
        let (k, theta) = grid.locate(w).ok_or_else(|| {
            Error::Parse(format!("sample {}: wealth {w} outside grid [0, {}]", i + 1, grid.w_max()))
        })?;
        mass[k] += 1.0 - theta;
        mass[k + 1] += theta;
    }
    let density: Vec<f64> = mass.iter().zip(grid.weights()).map(|(m, q)| m / q).collect();
    let dist = WealthDistribution::new(grid.clone(), density)?;
    let total: f64 = mass.iter().zip(grid.nodes()).map(|(m, w)| m * w).sum();
    let manifest = BinningManifest {
        samples: samples.len(),
        nodes: grid.len(),
        w_max: grid.w_max(),
        sample_mean: samples.iter().sum::<f64>() / samples.len() as f64,
        binned_mean: total / samples.len() as f64,
    };
    Ok((dist, manifest))
}
