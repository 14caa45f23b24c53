//! Field snapshot CSV.
//!
//! ```text
//! # grid: N=2 L=1 n=8
//! index,x,y,value
//! 0,-8.7500000000000000e-1,-8.7500000000000000e-1,3.1415926535897931e0
//! ```
//!
//! Rows follow row-major order. Offset-layout kernels carry an extra
//! `# layout: offset` line after the grid header. Values are written with 17
//! significant digits, which round-trips every `f64` exactly.

use super::{Field, Grid, Layout, SpaceTimeSeries};
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

const AXES: [&str; 3] = ["x", "y", "z"];

pub fn field_to_csv(field: &Field) -> String {
    let g = field.grid();
    let mut out = String::with_capacity(g.len() * 48);
    let _ = writeln!(
        out,
        "# grid: N={} L={} n={}",
        g.dim(),
        g.half_length(),
        g.n()
    );
    if field.layout() == Layout::Offset {
        out.push_str("# layout: offset\n");
    }
    out.push_str("index");
    for axis in AXES.iter().take(g.dim()) {
        let _ = write!(out, ",{axis}");
    }
    out.push_str(",value\n");
    for (i, v) in field.values().iter().enumerate() {
        let _ = write!(out, "{i}");
        for c in field.point(i) {
            let _ = write!(out, ",{c:.16e}");
        }
        let _ = writeln!(out, ",{v:.16e}");
    }
    out
}

pub fn field_from_csv(text: &str) -> Result<Field> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty field file".into()))?;
    let grid = parse_grid_header(header)?;
    let mut layout = Layout::Cell;
    let mut values = vec![f64::NAN; grid.len()];
    let mut seen = 0usize;
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if rest.trim() == "layout: offset" {
                layout = Layout::Offset;
            }
            continue;
        }
        if line.starts_with("index") {
            continue;
        }
        let mut cols = line.split(',');
        let idx: usize = cols
            .next()
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad index in row `{line}`")))?;
        let value: f64 = cols
            .next_back()
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad value in row `{line}`")))?;
        if idx >= grid.len() {
            return Err(Error::Parse(format!(
                "index {idx} outside grid of {} cells",
                grid.len()
            )));
        }
        values[idx] = value;
        seen += 1;
    }
    if seen != grid.len() {
        return Err(Error::Parse(format!(
            "expected {} rows, found {seen}",
            grid.len()
        )));
    }
    Field::with_layout(grid, layout, values)
}

fn parse_grid_header(line: &str) -> Result<Grid> {
    let body = line
        .trim()
        .strip_prefix("# grid:")
        .ok_or_else(|| Error::Parse(format!("missing `# grid:` header, got `{line}`")))?;
    let (mut dim, mut len, mut n) = (None, None, None);
    for tok in body.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header token `{tok}`")))?;
        let bad = || Error::Parse(format!("bad header value `{tok}`"));
        match k {
            "N" => dim = Some(v.parse::<usize>().map_err(|_| bad())?),
            "L" => len = Some(v.parse::<f64>().map_err(|_| bad())?),
            "n" => n = Some(v.parse::<usize>().map_err(|_| bad())?),
            _ => return Err(Error::Parse(format!("unknown header key `{k}`"))),
        }
    }
    match (dim, len, n) {
        (Some(d), Some(l), Some(n)) => Grid::new(d, l, n),
        _ => Err(Error::Parse(format!("incomplete grid header `{line}`"))),
    }
}

pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    fs::write(path, field_to_csv(field))?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<Field> {
    field_from_csv(&fs::read_to_string(path)?)
}

const INDEX_FILE: &str = "snapshots.csv";

/// Writes `snapshots.csv` (index, time, file) plus one field CSV per snapshot.
pub fn write_series(dir: &Path, series: &SpaceTimeSeries) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut index = String::from("index,time,file\n");
    for (k, (t, f)) in series.times().iter().zip(series.snapshots()).enumerate() {
        let name = format!("snapshot_{k:05}.csv");
        write_field(&dir.join(&name), f)?;
        let _ = writeln!(index, "{k},{t:.16e},{name}");
    }
    fs::write(dir.join(INDEX_FILE), index)?;
    Ok(())
}

pub fn read_series(dir: &Path) -> Result<SpaceTimeSeries> {
    let text = fs::read_to_string(dir.join(INDEX_FILE))?;
    let mut times = Vec::new();
    let mut snaps = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::Parse(format!("bad snapshot index row `{line}`")));
        }
        let t: f64 = cols[1]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad time `{}`", cols[1])))?;
        times.push(t);
        snaps.push(read_field(&dir.join(cols[2].trim()))?);
    }
    let grid = *snaps
        .first()
        .ok_or_else(|| Error::InsufficientData(format!("no snapshots in {}", dir.display())))?
        .grid();
    SpaceTimeSeries::from_parts(grid, times, snaps)
}
