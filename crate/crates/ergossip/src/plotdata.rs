//! Column extraction from CSV files into whitespace tables for gnuplot.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Linear,
    /// `log10` of every column after the first; the first column is the
    /// abscissa and passes through unchanged.
    Log,
}

impl Transform {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "linear" => Some(Transform::Linear),
            "log" => Some(Transform::Log),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub text: String,
    pub rows: usize,
    /// Rows dropped because a log-transformed value was nonpositive.
    pub skipped: usize,
}

pub fn emit_plotdata(csv_path: &Path, columns: &[&str], transform: Transform) -> Result<PlotData> {
    let text = std::fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    plotdata_from_str(&text, columns, transform)
}

pub fn plotdata_from_str(csv_text: &str, columns: &[&str], transform: Transform) -> Result<PlotData> {
    if columns.is_empty() {
        return Err(Error::Config("no columns requested".into()));
    }
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let header = rdr.headers()?.clone();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            header
                .iter()
                .position(|h| h == *c)
                .ok_or_else(|| Error::MissingColumn(c.to_string()))
        })
        .collect::<Result<_>>()?;

    let mut out = format!("# {}\n", columns.join(" "));
    let (mut rows, mut skipped) = (0, 0);
    for rec in rdr.records() {
        let rec = rec?;
        let mut vals = Vec::with_capacity(idx.len());
        let mut ok = true;
        for (k, &i) in idx.iter().enumerate() {
            let raw = rec.get(i).unwrap_or("");
            let v: f64 = match raw.parse() {
                Ok(v) => v,
                Err(_) => {
                    ok = false;
                    break;
                }
            };
            if transform == Transform::Log && k > 0 {
                if !(v > 0.0) {
                    ok = false;
                    break;
                }
                vals.push(v.log10());
            } else {
                vals.push(v);
            }
        }
        if !ok {
            skipped += 1;
            continue;
        }
        let line: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
        rows += 1;
    }
    Ok(PlotData {
        text: out,
        rows,
        skipped,
    })
}
