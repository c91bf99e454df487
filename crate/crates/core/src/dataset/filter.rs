use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use super::{ColumnKind, DatasetError, Record, Scalar, TextDataset, LABEL_COLUMN};
use crate::wire::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Eq,
    Ne,
    Le,
    Ge,
}

impl CompareOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CompareOp::Eq => "eq",
            CompareOp::Ne => "ne",
            CompareOp::Le => "le",
            CompareOp::Ge => "ge",
        }
    }

    fn is_ordering(self) -> bool {
        matches!(self, CompareOp::Le | CompareOp::Ge)
    }
}

impl FromStr for CompareOp {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eq" => Ok(CompareOp::Eq),
            "ne" => Ok(CompareOp::Ne),
            "le" => Ok(CompareOp::Le),
            "ge" => Ok(CompareOp::Ge),
            other => Err(DatasetError::InvalidSpec(format!("unknown operator {other:?}"))),
        }
    }
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub column: String,
    pub op: CompareOp,
    pub value: Scalar,
}

impl Predicate {
    pub fn new(column: &str, op: CompareOp, value: Scalar) -> Self {
        Predicate {
            column: column.to_owned(),
            op,
            value,
        }
    }

    /// A record without the column never matches, whatever the operator.
    fn matches(&self, record: &Record) -> bool {
        let cell = if self.column == LABEL_COLUMN {
            record.label.as_deref().map(|l| Scalar::Text(l.to_owned()))
        } else {
            record.extras.get(&self.column).cloned()
        };
        let Some(cell) = cell else { return false };
        match (&cell, &self.value, self.op) {
            (Scalar::Number(a), Scalar::Number(b), op) => match op {
                CompareOp::Eq => a == b,
                CompareOp::Ne => a != b,
                CompareOp::Le => a <= b,
                CompareOp::Ge => a >= b,
            },
            (Scalar::Text(a), Scalar::Text(b), CompareOp::Eq) => a == b,
            (Scalar::Text(a), Scalar::Text(b), CompareOp::Ne) => a != b,
            _ => false,
        }
    }
}

/// Declarative row filter shared by the kernel oracle and the view controls.
///
/// Length bounds are inclusive and count Unicode scalar values. Substring
/// matching is case-insensitive.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterSpec {
    pub substring: Option<String>,
    pub min_len: Option<usize>,
    pub max_len: Option<usize>,
    pub predicates: Vec<Predicate>,
    pub excluded_ids: BTreeSet<String>,
}

impl FilterSpec {
    pub fn is_empty(&self) -> bool {
        *self == FilterSpec::default()
    }

    pub fn substring(mut self, s: &str) -> Self {
        self.substring = Some(s.to_owned());
        self
    }

    pub fn min_len(mut self, n: usize) -> Self {
        self.min_len = Some(n);
        self
    }

    pub fn max_len(mut self, n: usize) -> Self {
        self.max_len = Some(n);
        self
    }

    pub fn predicate(mut self, column: &str, op: CompareOp, value: Scalar) -> Self {
        self.predicates.push(Predicate::new(column, op, value));
        self
    }

    pub fn exclude(mut self, id: &str) -> Self {
        self.excluded_ids.insert(id.to_owned());
        self
    }

    /// Checks bounds and predicate columns against `schema`.
    pub fn validate(&self, schema: &BTreeMap<String, ColumnKind>) -> Result<(), DatasetError> {
        if let (Some(lo), Some(hi)) = (self.min_len, self.max_len) {
            if lo > hi {
                return Err(DatasetError::InvalidSpec(format!("min_len {lo} exceeds max_len {hi}")));
            }
        }
        for p in &self.predicates {
            let kind = if p.column == LABEL_COLUMN {
                ColumnKind::Category
            } else {
                *schema
                    .get(&p.column)
                    .ok_or_else(|| DatasetError::UnknownColumn(p.column.clone()))?
            };
            let mismatch = |reason: String| DatasetError::TypeMismatch {
                column: p.column.clone(),
                reason,
            };
            if p.op.is_ordering() && kind != ColumnKind::Number {
                return Err(mismatch(format!("{} needs a number column, found {kind}", p.op)));
            }
            match (&p.value, kind) {
                (Scalar::Number(_), ColumnKind::Number) | (Scalar::Text(_), ColumnKind::String | ColumnKind::Category) => {}
                (Scalar::Number(_), _) => return Err(mismatch(format!("number compared with {kind} column"))),
                (Scalar::Text(_), _) => return Err(mismatch("text compared with number column".into())),
            }
        }
        Ok(())
    }

    pub fn matches(&self, record: &Record) -> bool {
        let needle = self.substring.as_deref().map(fold_case);
        self.matches_folded(record, needle.as_deref())
    }

    fn matches_folded(&self, record: &Record, needle: Option<&str>) -> bool {
        if self.excluded_ids.contains(&record.id) {
            return false;
        }
        if self.min_len.is_some() || self.max_len.is_some() {
            let len = record.text_len();
            if self.min_len.is_some_and(|lo| len < lo) || self.max_len.is_some_and(|hi| len > hi) {
                return false;
            }
        }
        if let Some(needle) = needle {
            if !fold_case(&record.text).contains(needle) {
                return false;
            }
        }
        self.predicates.iter().all(|p| p.matches(record))
    }

    /// Wire form. Absent options are omitted.
    pub fn to_value(&self) -> Value {
        let mut m = BTreeMap::new();
        if let Some(s) = &self.substring {
            m.insert("substring".to_owned(), Value::from(s.as_str()));
        }
        if let Some(n) = self.min_len {
            m.insert("min_len".to_owned(), Value::from(n));
        }
        if let Some(n) = self.max_len {
            m.insert("max_len".to_owned(), Value::from(n));
        }
        if !self.predicates.is_empty() {
            let preds = self
                .predicates
                .iter()
                .map(|p| {
                    Value::map([
                        ("column", Value::from(p.column.as_str())),
                        ("op", Value::from(p.op.as_str())),
                        ("value", p.value.to_value()),
                    ])
                })
                .collect();
            m.insert("predicates".to_owned(), Value::List(preds));
        }
        if !self.excluded_ids.is_empty() {
            let ids = self.excluded_ids.iter().map(|s| Value::from(s.as_str())).collect();
            m.insert("excluded_ids".to_owned(), Value::List(ids));
        }
        Value::Map(m)
    }

    /// Parses the wire form. `null` and `{}` both mean "no filter".
    pub fn from_value(value: &Value) -> Result<FilterSpec, DatasetError> {
        let invalid = |msg: &str| DatasetError::InvalidSpec(msg.to_owned());
        let map = match value {
            Value::Null => return Ok(FilterSpec::default()),
            Value::Map(m) => m,
            _ => return Err(invalid("filter must be an object")),
        };
        let mut spec = FilterSpec::default();
        for (key, v) in map {
            match (key.as_str(), v) {
                (_, Value::Null) => {}
                ("substring", Value::String(s)) => spec.substring = Some(s.clone()),
                ("min_len", v) => spec.min_len = Some(length(v).ok_or_else(|| invalid("min_len must be a non-negative integer"))?),
                ("max_len", v) => spec.max_len = Some(length(v).ok_or_else(|| invalid("max_len must be a non-negative integer"))?),
                ("predicates", Value::List(items)) => {
                    for item in items {
                        spec.predicates.push(predicate_from_value(item)?);
                    }
                }
                ("excluded_ids", Value::List(ids)) => {
                    for id in ids {
                        let id = id.as_str().ok_or_else(|| invalid("excluded_ids must be strings"))?;
                        spec.excluded_ids.insert(id.to_owned());
                    }
                }
                (other, _) => return Err(DatasetError::InvalidSpec(format!("unexpected field {other:?}"))),
            }
        }
        Ok(spec)
    }
}

fn length(v: &Value) -> Option<usize> {
    v.as_u64().and_then(|n| usize::try_from(n).ok())
}

fn predicate_from_value(v: &Value) -> Result<Predicate, DatasetError> {
    let invalid = |msg: &str| DatasetError::InvalidSpec(msg.to_owned());
    let column = v
        .get("column")
        .and_then(Value::as_str)
        .ok_or_else(|| invalid("predicate needs a column"))?;
    let op: CompareOp = v
        .get("op")
        .and_then(Value::as_str)
        .ok_or_else(|| invalid("predicate needs an op"))?
        .parse()?;
    let value = match v.get("value") {
        Some(Value::Number(n)) => Scalar::Number(*n),
        Some(Value::String(s)) => Scalar::Text(s.clone()),
        _ => return Err(invalid("predicate value must be a number or string")),
    };
    Ok(Predicate::new(column, op, value))
}

/// Per-character simple case folding: one-to-one lowercase mappings plus the
/// few folds that lowercasing misses.
pub(crate) fn fold_case(s: &str) -> String {
    s.chars().map(fold_char).collect()
}

fn fold_char(c: char) -> char {
    match c {
        'ς' => 'σ',
        'ſ' => 's',
        'ϐ' => 'β',
        'ϑ' => 'θ',
        'ϕ' => 'φ',
        'ϖ' => 'π',
        'ϰ' => 'κ',
        'ϱ' => 'ρ',
        'ϵ' => 'ε',
        'ẞ' => 'ß',
        _ => {
            let mut lower = c.to_lowercase();
            match (lower.next(), lower.next()) {
                (Some(l), None) => l,
                _ => c,
            }
        }
    }
}

/// Records matching `spec`, in original order, with the schema unchanged.
pub fn apply_filter(ds: &TextDataset, spec: &FilterSpec) -> Result<TextDataset, DatasetError> {
    spec.validate(ds.schema())?;
    let needle = spec.substring.as_deref().map(fold_case);
    let kept = ds
        .records()
        .iter()
        .filter(|r| spec.matches_folded(r, needle.as_deref()))
        .cloned()
        .collect();
    Ok(TextDataset::from_parts(kept, ds.schema().clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ingest, Source};

    fn texts(ds: &TextDataset) -> Vec<&str> {
        ds.texts().collect()
    }

    fn small() -> TextDataset {
        TextDataset::new(
            ["hi", "hello", "worlds"]
                .iter()
                .enumerate()
                .map(|(i, t)| Record::new(i.to_string(), *t, None))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn min_length_inclusive() {
        let out = apply_filter(&small(), &FilterSpec::default().min_len(5)).unwrap();
        assert_eq!(texts(&out), ["hello", "worlds"]);
        let out = apply_filter(&small(), &FilterSpec::default().min_len(2).max_len(5)).unwrap();
        assert_eq!(texts(&out), ["hi", "hello"]);
    }

    #[test]
    fn length_counts_scalar_values() {
        let ds = TextDataset::new(vec![Record::new("0", "héllo", None), Record::new("1", "日本語", None)]).unwrap();
        let out = apply_filter(&ds, &FilterSpec::default().max_len(3)).unwrap();
        assert_eq!(texts(&out), ["日本語"]);
    }

    #[test]
    fn substring_is_case_insensitive() {
        let ds = TextDataset::new(vec![Record::new("0", "Goodness me", None), Record::new("1", "bad", None)]).unwrap();
        let out = apply_filter(&ds, &FilterSpec::default().substring("GOOD")).unwrap();
        assert_eq!(texts(&out), ["Goodness me"]);
        assert_eq!(fold_case("ΣΟΦΟΣ"), fold_case("σοφος"));
    }

    #[test]
    fn empty_spec_is_identity() {
        let ds = small();
        assert_eq!(apply_filter(&ds, &FilterSpec::default()).unwrap(), ds);
    }

    #[test]
    fn predicates_and_exclusions() {
        let csv = "id,text,label,score,split\n\
                   a,one,pos,1,train\nb,two,neg,5,test\nc,three,pos,9,train\n";
        let ds = ingest(Source::Csv(csv)).unwrap();
        let spec = FilterSpec::default()
            .predicate("score", CompareOp::Ge, Scalar::Number(2.0))
            .predicate("split", CompareOp::Eq, Scalar::Text("train".into()));
        assert_eq!(texts(&apply_filter(&ds, &spec).unwrap()), ["three"]);
        let spec = FilterSpec::default()
            .predicate(LABEL_COLUMN, CompareOp::Ne, Scalar::Text("neg".into()))
            .exclude("a");
        assert_eq!(texts(&apply_filter(&ds, &spec).unwrap()), ["three"]);
    }

    #[test]
    fn validation_errors() {
        let csv = "text,score,split\na,1,x\n";
        let ds = ingest(Source::Csv(csv)).unwrap();
        let unknown = FilterSpec::default().predicate("nope", CompareOp::Eq, Scalar::Number(1.0));
        assert_eq!(apply_filter(&ds, &unknown), Err(DatasetError::UnknownColumn("nope".into())));
        let le_on_category = FilterSpec::default().predicate("split", CompareOp::Le, Scalar::Text("x".into()));
        assert!(matches!(apply_filter(&ds, &le_on_category), Err(DatasetError::TypeMismatch { .. })));
        let text_on_number = FilterSpec::default().predicate("score", CompareOp::Eq, Scalar::Text("1".into()));
        assert!(matches!(apply_filter(&ds, &text_on_number), Err(DatasetError::TypeMismatch { .. })));
        let inverted = FilterSpec::default().min_len(4).max_len(2);
        assert!(matches!(apply_filter(&ds, &inverted), Err(DatasetError::InvalidSpec(_))));
    }

    #[test]
    fn wire_form_round_trips() {
        let spec = FilterSpec::default()
            .substring("x")
            .min_len(1)
            .max_len(9)
            .predicate("score", CompareOp::Le, Scalar::Number(2.5))
            .exclude("b")
            .exclude("a");
        let v = spec.to_value();
        assert_eq!(FilterSpec::from_value(&v).unwrap(), spec);
        assert_eq!(FilterSpec::from_value(&Value::Null).unwrap(), FilterSpec::default());
        assert_eq!(FilterSpec::default().to_value().encode(), "{}");
        assert!(FilterSpec::from_value(&Value::map([("min_len", Value::from(-1))])).is_err());
        assert!(FilterSpec::from_value(&Value::map([("bogus", Value::from(1))])).is_err());
    }
}
