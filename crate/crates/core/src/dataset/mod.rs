//! Labeled text records, ingestion, filtering and column statistics.
//!
//! A [`TextDataset`] is immutable once built. Filtering produces a new
//! dataset that keeps the original record order and schema.

mod filter;
mod ingest;
mod stats;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::wire::{self, Message, PageTarget, Value, WireError};

pub use filter::{apply_filter, CompareOp, FilterSpec, Predicate};
pub use ingest::{ingest, ingest_with, IngestOptions, Source, DEFAULT_CATEGORY_THRESHOLD};
pub use stats::{column_stats, ColumnStats, DatasetStats, LengthRange};

/// Reserved column name that predicates may use to filter on labels.
pub const LABEL_COLUMN: &str = "label";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("row {row} has no text field")]
    MissingTextField { row: usize },
    #[error("parse error on line {line}: {reason}")]
    ParseError { line: usize, reason: String },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("type mismatch on column {column:?}: {reason}")]
    TypeMismatch { column: String, reason: String },
    #[error("invalid filter: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Wire(#[from] WireError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ColumnKind {
    String,
    Number,
    Category,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::String => "string",
            ColumnKind::Number => "number",
            ColumnKind::Category => "category",
        }
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single extra-column cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    pub fn to_value(&self) -> Value {
        match self {
            Scalar::Number(n) => Value::Number(*n),
            Scalar::Text(s) => Value::String(s.clone()),
        }
    }

    /// Canonical text of the cell; numbers use the wire number format.
    pub fn render(&self) -> String {
        match self {
            Scalar::Number(n) => Value::Number(*n).encode(),
            Scalar::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub id: String,
    pub text: String,
    pub label: Option<String>,
    pub extras: BTreeMap<String, Scalar>,
}

impl Record {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Option<&str>) -> Self {
        Record {
            id: id.into(),
            text: text.into(),
            label: label.map(str::to_owned),
            extras: BTreeMap::new(),
        }
    }

    pub fn with_extra(mut self, column: &str, value: Scalar) -> Self {
        self.extras.insert(column.to_owned(), value);
        self
    }

    /// Text length in Unicode scalar values.
    pub fn text_len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn to_value(&self) -> Value {
        let mut m: BTreeMap<String, Value> = self
            .extras
            .iter()
            .map(|(k, v)| (k.clone(), v.to_value()))
            .collect();
        m.insert("id".into(), Value::from(self.id.as_str()));
        m.insert("text".into(), Value::from(self.text.as_str()));
        if let Some(label) = &self.label {
            m.insert("label".into(), Value::from(label.as_str()));
        }
        Value::Map(m)
    }
}

/// Ordered labeled text records with a typed schema for the extra columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TextDataset {
    records: Vec<Record>,
    schema: BTreeMap<String, ColumnKind>,
}

impl TextDataset {
    /// Builds a dataset, inferring the schema with the default category threshold.
    pub fn new(records: Vec<Record>) -> Result<Self, DatasetError> {
        Self::with_threshold(records, DEFAULT_CATEGORY_THRESHOLD)
    }

    pub(crate) fn with_threshold(records: Vec<Record>, category_threshold: usize) -> Result<Self, DatasetError> {
        let mut seen = std::collections::HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(DatasetError::DuplicateId(r.id.clone()));
            }
            if r.extras.contains_key("id") || r.extras.contains_key("text") || r.extras.contains_key(LABEL_COLUMN) {
                return Err(DatasetError::ParseError {
                    line: 0,
                    reason: format!("record {:?} uses a reserved column name", r.id),
                });
            }
        }
        let schema = ingest::infer_schema(&records, category_threshold);
        let records = ingest::conform(records, &schema);
        Ok(TextDataset { records, schema })
    }

    pub(crate) fn from_parts(records: Vec<Record>, schema: BTreeMap<String, ColumnKind>) -> Self {
        TextDataset { records, schema }
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn schema(&self) -> &BTreeMap<String, ColumnKind> {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.id.as_str())
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.text.as_str())
    }

    pub fn get(&self, index: usize) -> Option<&Record> {
        self.records.get(index)
    }

    /// Records as wire values: `id`, `text`, optional `label`, plus extras.
    pub fn to_records(&self) -> Vec<Value> {
        self.records.iter().map(Record::to_value).collect()
    }

    /// One canonical record per line, newline-terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.to_value().encode());
            out.push('\n');
        }
        out
    }

    pub fn schema_value(&self) -> Value {
        Value::Map(
            self.schema
                .iter()
                .map(|(k, kind)| (k.clone(), Value::from(kind.as_str())))
                .collect(),
        )
    }

    /// Record pages for a paged transfer; reassembly yields [`Self::to_records`].
    pub fn to_pages(
        &self,
        target: &PageTarget<'_>,
        page_size: usize,
        transfer_id: &str,
    ) -> Result<Vec<Message>, DatasetError> {
        Ok(wire::paginate(target, &self.to_records(), page_size, transfer_id)?)
    }
}
