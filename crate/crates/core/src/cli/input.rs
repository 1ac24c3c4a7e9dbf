//! Batch input: CSV with a `n,d,…` header or JSON (one object or an array).

use std::path::Path;

use serde::de::DeserializeOwned;

use crate::model::{MomentVector, ProblemDims, SymmetricQuadratic};

/// Input failure with the 1-based line it was detected on.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    pub line: Option<u64>,
    pub message: String,
}

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn at(line: u64, message: impl Into<String>) -> InputError {
    InputError { line: Some(line), message: message.into() }
}

fn plain(message: impl Into<String>) -> InputError {
    InputError { line: None, message: message.into() }
}

/// A parsed row and the line it came from.
pub type Rows<T> = Vec<(u64, T)>;

#[derive(Debug, Clone, Copy)]
enum Kind {
    Moments,
    Quadratics,
}

impl Kind {
    fn header(self, d: usize) -> Vec<String> {
        let (c0, c) = match self {
            Kind::Moments => ("z0", "z"),
            Kind::Quadratics => ("a0", "a"),
        };
        ["n", "d", c0]
            .into_iter()
            .map(String::from)
            .chain((1..=d).map(|i| format!("{c}{i}")))
            .chain((1..=d).map(|i| format!("{c}{i}{i}")))
            .collect()
    }
}

pub fn read_moments(path: &Path) -> Result<Rows<MomentVector>, InputError> {
    read(path, Kind::Moments, MomentVector::from_flat)
}

pub fn read_quadratics(path: &Path) -> Result<Rows<SymmetricQuadratic>, InputError> {
    read(path, Kind::Quadratics, SymmetricQuadratic::from_flat)
}

fn read<T: DeserializeOwned>(
    path: &Path,
    kind: Kind,
    build: impl Fn(ProblemDims, &[f64]) -> crate::Result<T>,
) -> Result<Rows<T>, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| plain(format!("{}: {e}", path.display())))?;
    match text.trim_start().chars().next() {
        Some('{' | '[') => parse_json(&text),
        Some(_) => parse_csv(&text, kind, build),
        None => Err(at(1, "empty input")),
    }
}

fn parse_json<T: DeserializeOwned>(text: &str) -> Result<Rows<T>, InputError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| at(e.line() as u64, e.to_string()))?;
    let items = match value {
        serde_json::Value::Array(items) => items,
        other => vec![other],
    };
    // Line numbers of array elements are not kept by `Value`; report the
    // position in the array instead.
    items
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            serde_json::from_value(v)
                .map(|t| (i as u64 + 1, t))
                .map_err(|e| plain(format!("record {}: {e}", i + 1)))
        })
        .collect()
}

fn parse_csv<T>(
    text: &str,
    kind: Kind,
    build: impl Fn(ProblemDims, &[f64]) -> crate::Result<T>,
) -> Result<Rows<T>, InputError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| at(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 3 || !(header.len() - 3).is_multiple_of(2) {
        return Err(at(1, format!("header must be {}", kind.header(1).join(","))));
    }
    let d = (header.len() - 3) / 2;
    if d == 0 || header != kind.header(d) {
        return Err(at(1, format!("header must be {}", kind.header(d.max(1)).join(","))));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            at(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let int = |i: usize| {
            record[i]
                .parse::<usize>()
                .map_err(|_| at(line, format!("column {}: expected an integer, got `{}`", header[i], &record[i])))
        };
        let (n, rd) = (int(0)?, int(1)?);
        if rd != d {
            return Err(at(line, format!("d = {rd} does not match the header (d = {d})")));
        }
        let flat = (2..record.len())
            .map(|i| {
                record[i]
                    .parse::<f64>()
                    .map_err(|_| at(line, format!("column {}: expected a number, got `{}`", header[i], &record[i])))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let dims = ProblemDims::new(n, d).map_err(|e| at(line, e.to_string()))?;
        rows.push((line, build(dims, &flat).map_err(|e| at(line, e.to_string()))?));
    }
    if rows.is_empty() {
        return Err(at(1, "no data rows"));
    }
    Ok(rows)
}

/// Comma-separated numbers, e.g. `1,0,-0.5`.
pub fn parse_tuple(s: &str) -> Result<Vec<f64>, InputError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| plain(format!("expected a number, got `{}` in `{s}`", x.trim())))
        })
        .collect()
}
