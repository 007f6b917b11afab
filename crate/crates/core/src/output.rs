//! Plot-ready CSV and JSON artifacts with a metadata header.
//!
//! CSV files start with `#` comment lines carrying the metadata, then a row of
//! column names, then data rows. Floats are written with 17 significant
//! digits so that every value round-trips exactly.

use std::io::{BufRead, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::distributions::{CorrectionFit, DistributionGrid};
use crate::mc::Histogram;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidParameter(format!("unknown output format {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub program: String,
    pub version: String,
    pub command: String,
    /// the resolved configuration, echoed verbatim
    pub config: serde_json::Value,
    /// seconds since the Unix epoch; absent when suppressed
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl Metadata {
    pub fn new(command: &str, config: &impl Serialize, timestamp: bool) -> Result<Self> {
        Ok(Self {
            program: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: serde_json::to_value(config)?,
            timestamp: timestamp.then(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            }),
        })
    }
}

/// Rectangular numeric table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Appends the rows of `other`, which must have the same columns.
    pub fn extend(&mut self, other: Table) -> Result<()> {
        if other.columns != self.columns {
            return Err(Error::GridMismatch(format!("columns {:?} vs {:?}", self.columns, other.columns)));
        }
        self.rows.extend(other.rows);
        Ok(())
    }

    /// Long-format rows `n, x, value` or `n, a, b, value`. The sine limit has
    /// `n` = inf.
    pub fn from_grid(g: &DistributionGrid) -> Self {
        let n = g.n_rank.unwrap_or(f64::INFINITY);
        match g.axes.as_slice() {
            [x] => {
                let mut t = Table::new(&["n", "x", "value"]);
                for (x, v) in x.iter().zip(&g.values) {
                    t.push(vec![n, *x, *v]);
                }
                t
            }
            [xa, xb] => {
                let mut t = Table::new(&["n", "a", "b", "value"]);
                for (i, a) in xa.iter().enumerate() {
                    for (j, b) in xb.iter().enumerate() {
                        t.push(vec![n, *a, *b, g.values[i * xb.len() + j]]);
                    }
                }
                t
            }
            _ => Table::new(&["n", "value"]),
        }
    }

    pub fn from_fit(fit: &CorrectionFit) -> Self {
        match fit.axes.as_slice() {
            [x] => {
                let mut t = Table::new(&["x", "c2", "c4", "residual"]);
                for (k, x) in x.iter().enumerate() {
                    t.push(vec![*x, fit.c2[k], fit.c4[k], fit.residual[k]]);
                }
                t
            }
            [xa, xb] => {
                let mut t = Table::new(&["a", "b", "c2", "c4", "residual"]);
                for (i, a) in xa.iter().enumerate() {
                    for (j, b) in xb.iter().enumerate() {
                        let k = i * xb.len() + j;
                        t.push(vec![*a, *b, fit.c2[k], fit.c4[k], fit.residual[k]]);
                    }
                }
                t
            }
            _ => Table::new(&["c2", "c4", "residual"]),
        }
    }

    /// One row per bin with its bounds, count, density and standard error.
    pub fn from_histogram(h: &Histogram) -> Self {
        let mut cols: Vec<String> = Vec::new();
        for k in 0..h.edges.len() {
            cols.push(format!("lo{k}"));
            cols.push(format!("hi{k}"));
        }
        cols.extend(["count", "density", "stderr"].map(String::from));
        let mut t = Table { columns: cols, rows: Vec::with_capacity(h.bins()) };
        for k in 0..h.bins() {
            let mut row: Vec<f64> = h.bin_bounds(k).into_iter().flat_map(|(l, u)| [l, u]).collect();
            row.extend([h.counts[k] as f64, h.density[k], h.stderr[k]]);
            t.rows.push(row);
        }
        t
    }
}

/// 17 significant digits.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn write_csv(w: &mut impl Write, meta: &Metadata, table: &Table) -> Result<()> {
    writeln!(w, "# program: {} {}", meta.program, meta.version)?;
    writeln!(w, "# command: {}", meta.command)?;
    writeln!(w, "# config: {}", serde_json::to_string(&meta.config)?)?;
    if let Some(ts) = meta.timestamp {
        writeln!(w, "# timestamp: {ts}")?;
    }
    writeln!(w, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|&x| format_f64(x)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// `{"metadata": ..., "data": ...}` followed by a newline.
pub fn write_json(w: &mut impl Write, meta: &Metadata, data: &impl Serialize) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        metadata: &'a Metadata,
        data: &'a T,
    }
    serde_json::to_writer_pretty(&mut *w, &Doc { metadata: meta, data })?;
    writeln!(w)?;
    Ok(())
}

/// Reads back the table part of a CSV written by [`write_csv`].
pub fn read_csv(r: impl BufRead) -> Result<Table> {
    let mut lines = r.lines().filter(|l| !matches!(l, Ok(s) if s.starts_with('#') || s.is_empty()));
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidParameter("CSV without header row".into()))??;
    let columns: Vec<String> = header.split(',').map(String::from).collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let row = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidParameter(format!("row {}: {e}", k + 1)))?;
        if row.len() != columns.len() {
            return Err(Error::InvalidParameter(format!("row {} has {} cells", k + 1, row.len())));
        }
        rows.push(row);
    }
    Ok(Table { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_doubles() {
        let meta = Metadata::new("test", &serde_json::json!({"n": 10}), false).unwrap();
        let mut t = Table::new(&["x", "y"]);
        t.push(vec![0.1, 1.0 / 3.0]);
        t.push(vec![f64::MIN_POSITIVE, -2.5e300]);
        t.push(vec![std::f64::consts::PI, f64::INFINITY]);
        let mut buf = Vec::new();
        write_csv(&mut buf, &meta, &t).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("3.3333333333333331e-1"));
        assert!(!text.contains("timestamp"));
    }

    #[test]
    fn json_has_metadata() {
        let meta = Metadata::new("pnn", &serde_json::json!({"n": [8]}), true).unwrap();
        let mut buf = Vec::new();
        write_json(&mut buf, &meta, &vec![1.0, 2.0]).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["metadata"]["command"], "pnn");
        assert!(v["metadata"]["timestamp"].is_u64());
        assert_eq!(v["data"][1], 2.0);
    }
}
