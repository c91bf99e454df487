use std::collections::{BTreeMap, BTreeSet};

use super::{ColumnKind, DatasetError, Record, Scalar, TextDataset};
use crate::wire::Value;

/// Columns with at most this many distinct non-numeric values are categories.
pub const DEFAULT_CATEGORY_THRESHOLD: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    pub category_threshold: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            category_threshold: DEFAULT_CATEGORY_THRESHOLD,
        }
    }
}

/// Input accepted by [`ingest`].
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    /// In-memory records, one map per row.
    Records(&'a [Value]),
    /// One JSON object per line.
    Jsonl(&'a str),
    /// Header row plus data rows.
    Csv(&'a str),
}

pub fn ingest(source: Source<'_>) -> Result<TextDataset, DatasetError> {
    ingest_with(source, IngestOptions::default())
}

pub fn ingest_with(source: Source<'_>, options: IngestOptions) -> Result<TextDataset, DatasetError> {
    let rows = match source {
        Source::Records(values) => values
            .iter()
            .enumerate()
            .map(|(i, v)| row_from_value(v, i + 1))
            .collect::<Result<Vec<_>, _>>()?,
        Source::Jsonl(text) => parse_jsonl(text)?,
        Source::Csv(text) => parse_csv(text)?,
    };
    build(rows, options.category_threshold)
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Number(f64),
    Text(String),
}

impl Cell {
    fn into_string(self) -> String {
        match self {
            Cell::Number(n) => Value::Number(n).encode(),
            Cell::Text(s) => s,
        }
    }
}

struct RawRow {
    line: usize,
    cells: BTreeMap<String, Cell>,
}

fn row_from_value(value: &Value, line: usize) -> Result<RawRow, DatasetError> {
    let map = value.as_map().ok_or_else(|| DatasetError::ParseError {
        line,
        reason: "expected an object".into(),
    })?;
    let mut cells = BTreeMap::new();
    for (k, v) in map {
        let cell = match v {
            Value::Null => continue,
            Value::Bool(b) => Cell::Text(b.to_string()),
            Value::Number(n) => Cell::Number(*n),
            Value::String(s) => Cell::Text(s.clone()),
            Value::List(_) | Value::Map(_) => {
                return Err(DatasetError::ParseError {
                    line,
                    reason: format!("field {k:?} is not a scalar"),
                })
            }
        };
        cells.insert(k.clone(), cell);
    }
    Ok(RawRow { line, cells })
}

fn parse_jsonl(text: &str) -> Result<Vec<RawRow>, DatasetError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let value = Value::decode(l).map_err(|e| DatasetError::ParseError {
                line: i + 1,
                reason: e.to_string(),
            })?;
            row_from_value(&value, i + 1)
        })
        .collect()
}

fn parse_csv(text: &str) -> Result<Vec<RawRow>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let csv_err = |e: csv::Error| DatasetError::ParseError {
        line: e.position().map_or(0, |p| p.line() as usize),
        reason: e.to_string(),
    };
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.is_empty() {
        return Err(DatasetError::ParseError {
            line: 1,
            reason: "missing header row".into(),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let cells = headers
            .iter()
            .zip(record.iter())
            .filter(|(_, cell)| !cell.is_empty())
            .map(|(h, cell)| {
                let parsed = match cell.trim().parse::<f64>() {
                    Ok(n) if n.is_finite() && h != "id" && h != "text" && h != "label" => Cell::Number(n),
                    _ => Cell::Text(cell.to_owned()),
                };
                (h.to_owned(), parsed)
            })
            .collect();
        rows.push(RawRow { line, cells });
    }
    Ok(rows)
}

fn build(rows: Vec<RawRow>, category_threshold: usize) -> Result<TextDataset, DatasetError> {
    let width = rows.len().saturating_sub(1).to_string().len();
    let mut records = Vec::with_capacity(rows.len());
    for (index, mut row) in rows.into_iter().enumerate() {
        let text = row
            .cells
            .remove("text")
            .ok_or(DatasetError::MissingTextField { row: row.line })?
            .into_string();
        let id = row
            .cells
            .remove("id")
            .map_or_else(|| format!("{index:0width$}"), Cell::into_string);
        let label = row.cells.remove("label").map(Cell::into_string);
        let extras = row
            .cells
            .into_iter()
            .map(|(k, c)| {
                let s = match c {
                    Cell::Number(n) => Scalar::Number(n),
                    Cell::Text(t) => Scalar::Text(t),
                };
                (k, s)
            })
            .collect();
        records.push(Record {
            id,
            text,
            label,
            extras,
        });
    }
    TextDataset::with_threshold(records, category_threshold)
}

/// Numeric columns are those whose every present cell is a number.
pub(super) fn infer_schema(records: &[Record], category_threshold: usize) -> BTreeMap<String, ColumnKind> {
    let mut columns: BTreeMap<&str, (bool, BTreeSet<String>)> = BTreeMap::new();
    for r in records {
        for (k, v) in &r.extras {
            let (all_numeric, distinct) = columns.entry(k).or_insert((true, BTreeSet::new()));
            *all_numeric &= matches!(v, Scalar::Number(_));
            if distinct.len() <= category_threshold {
                distinct.insert(v.render());
            }
        }
    }
    columns
        .into_iter()
        .map(|(k, (numeric, distinct))| {
            let kind = if numeric {
                ColumnKind::Number
            } else if distinct.len() <= category_threshold {
                ColumnKind::Category
            } else {
                ColumnKind::String
            };
            (k.to_owned(), kind)
        })
        .collect()
}

/// Numbers in non-numeric columns become their canonical text.
pub(super) fn conform(mut records: Vec<Record>, schema: &BTreeMap<String, ColumnKind>) -> Vec<Record> {
    for r in &mut records {
        for (k, v) in r.extras.iter_mut() {
            if schema.get(k) != Some(&ColumnKind::Number) {
                if let Scalar::Number(_) = v {
                    *v = Scalar::Text(v.render());
                }
            }
        }
    }
    records
}
