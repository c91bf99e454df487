use std::collections::{BTreeMap, BTreeSet};

use super::{ColumnKind, Scalar, TextDataset, LABEL_COLUMN};
use crate::wire::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LengthRange {
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnStats {
    Number { min: f64, max: f64 },
    Category { distinct: BTreeSet<String> },
}

/// Ranges that bound the view's filter controls.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetStats {
    /// Text length in characters; `0..=0` for an empty dataset.
    pub length: LengthRange,
    /// Number and category columns, plus `label` when any record has one.
    pub columns: BTreeMap<String, ColumnStats>,
}

impl DatasetStats {
    pub fn to_value(&self) -> Value {
        let columns = self
            .columns
            .iter()
            .map(|(k, s)| {
                let v = match s {
                    ColumnStats::Number { min, max } => Value::map([
                        ("kind", Value::from("number")),
                        ("min", Value::from(*min)),
                        ("max", Value::from(*max)),
                    ]),
                    ColumnStats::Category { distinct } => Value::map([
                        ("kind", Value::from("category")),
                        ("distinct", distinct.iter().map(|s| Value::from(s.as_str())).collect::<Vec<_>>().into()),
                    ]),
                };
                (k.clone(), v)
            })
            .collect();
        Value::map([
            (
                "length",
                Value::map([
                    ("min", Value::from(self.length.min)),
                    ("max", Value::from(self.length.max)),
                ]),
            ),
            ("columns", Value::Map(columns)),
        ])
    }
}

pub fn column_stats(ds: &TextDataset) -> DatasetStats {
    let mut stats = DatasetStats::default();
    let lengths = ds.records().iter().map(|r| r.text_len());
    if let (Some(min), Some(max)) = (lengths.clone().min(), lengths.max()) {
        stats.length = LengthRange { min, max };
    }

    for (column, kind) in ds.schema() {
        let cells = ds.records().iter().filter_map(|r| r.extras.get(column));
        let entry = match kind {
            ColumnKind::Number => {
                let nums: Vec<f64> = cells
                    .filter_map(|c| match c {
                        Scalar::Number(n) => Some(*n),
                        Scalar::Text(_) => None,
                    })
                    .collect();
                let Some(first) = nums.first().copied() else { continue };
                let (min, max) = nums.iter().fold((first, first), |(lo, hi), &n| (lo.min(n), hi.max(n)));
                ColumnStats::Number { min, max }
            }
            ColumnKind::Category => ColumnStats::Category {
                distinct: cells.map(Scalar::render).collect(),
            },
            ColumnKind::String => continue,
        };
        stats.columns.insert(column.clone(), entry);
    }

    let labels: BTreeSet<String> = ds.records().iter().filter_map(|r| r.label.clone()).collect();
    if !labels.is_empty() {
        stats.columns.insert(LABEL_COLUMN.to_owned(), ColumnStats::Category { distinct: labels });
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ingest, Record, Source};

    #[test]
    fn text_length_range() {
        let ds = TextDataset::new(vec![Record::new("0", "hi", None), Record::new("1", "hello", None)]).unwrap();
        assert_eq!(column_stats(&ds).length, LengthRange { min: 2, max: 5 });
    }

    #[test]
    fn empty_dataset() {
        let stats = column_stats(&TextDataset::default());
        assert!(stats.columns.is_empty());
        assert_eq!(stats.length, LengthRange { min: 0, max: 0 });
    }

    #[test]
    fn category_and_number_columns() {
        let csv = "text,c,n\nx,a,3\ny,a,-1\nz,b,2.5\n";
        let stats = column_stats(&ingest(Source::Csv(csv)).unwrap());
        assert_eq!(
            stats.columns["c"],
            ColumnStats::Category { distinct: ["a", "b"].iter().map(|s| s.to_string()).collect() }
        );
        assert_eq!(stats.columns["n"], ColumnStats::Number { min: -1.0, max: 3.0 });
        assert_eq!(
            stats.to_value().get("length").unwrap().encode(),
            r#"{"max":1,"min":1}"#
        );
    }
}
