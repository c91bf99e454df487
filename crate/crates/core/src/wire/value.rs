//! Serializable values and the canonical text encoding.

use std::any::Any;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::de::{self, Deserialize, Deserializer, MapAccess, SeqAccess, Visitor};

use super::WireError;

/// A JSON-compatible value with finite 64-bit float numbers.
///
/// Maps are ordered by key, so equal values always encode identically.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Value {
    #[default]
    Null,
    Bool(bool),
    Number(f64),
    String(String),
    List(Vec<Value>),
    Map(BTreeMap<String, Value>),
}

impl Value {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::String(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Number(n) => Some(*n),
            _ => None,
        }
    }

    /// Non-negative integral number that fits a `u64` without rounding.
    pub fn as_u64(&self) -> Option<u64> {
        match self {
            Value::Number(n) if *n >= 0.0 && n.fract() == 0.0 && *n <= MAX_SAFE_INTEGER => {
                Some(*n as u64)
            }
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(items) => Some(items),
            _ => None,
        }
    }

    pub fn as_map(&self) -> Option<&BTreeMap<String, Value>> {
        match self {
            Value::Map(m) => Some(m),
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Looks up `key` when this value is a map.
    pub fn get(&self, key: &str) -> Option<&Value> {
        self.as_map().and_then(|m| m.get(key))
    }

    /// Builds a map value from `(key, value)` pairs. Later duplicates win.
    pub fn map<K, I>(entries: I) -> Value
    where
        K: Into<String>,
        I: IntoIterator<Item = (K, Value)>,
    {
        Value::Map(entries.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    /// Canonical text form: sorted keys, no whitespace, shortest round-trip numbers.
    pub fn encode(&self) -> String {
        let mut out = String::new();
        write_canonical(self, &mut out);
        out
    }

    /// Parses text produced by [`Value::encode`] (or any JSON text).
    pub fn decode(text: &str) -> Result<Value, WireError> {
        serde_json::from_str(text).map_err(|e| malformed(text, &e))
    }
}

pub(crate) const MAX_SAFE_INTEGER: f64 = 9_007_199_254_740_991.0;

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<f64> for Value {
    fn from(n: f64) -> Self {
        Value::Number(n)
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Number(n as f64)
    }
}

impl From<u64> for Value {
    fn from(n: u64) -> Self {
        Value::Number(n as f64)
    }
}

impl From<usize> for Value {
    fn from(n: usize) -> Self {
        Value::Number(n as f64)
    }
}

impl From<i32> for Value {
    fn from(n: i32) -> Self {
        Value::Number(f64::from(n))
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::String(s.to_owned())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::String(s)
    }
}

impl<T: Into<Value>> From<Vec<T>> for Value {
    fn from(items: Vec<T>) -> Self {
        Value::List(items.into_iter().map(Into::into).collect())
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Null, Into::into)
    }
}

impl From<BTreeMap<String, Value>> for Value {
    fn from(m: BTreeMap<String, Value>) -> Self {
        Value::Map(m)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(true) => out.push_str("true"),
        Value::Bool(false) => out.push_str("false"),
        Value::Number(n) => write_number(*n, out),
        Value::String(s) => write_string(s, out),
        Value::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Map(entries) => {
            out.push('{');
            for (i, (k, v)) in entries.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_string(k, out);
                out.push(':');
                write_canonical(v, out);
            }
            out.push('}');
        }
    }
}

/// Integral values below 1e16 print as plain integers; everything else uses
/// the shortest representation that round-trips. Negative zero prints as `0`.
pub(crate) fn write_number(n: f64, out: &mut String) {
    debug_assert!(n.is_finite(), "non-finite numbers are rejected upstream");
    if n == 0.0 {
        out.push('0');
    } else if n.fract() == 0.0 && n.abs() < 1e16 {
        out.push_str(&(n as i64).to_string());
    } else {
        let mut buf = ryu::Buffer::new();
        out.push_str(buf.format_finite(n));
    }
}

fn write_string(s: &str, out: &mut String) {
    // serde_json's escaping is already minimal and deterministic.
    out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"));
}

fn malformed(text: &str, err: &serde_json::Error) -> WireError {
    let offset = byte_offset(text, err.line(), err.column());
    WireError::Malformed {
        offset,
        reason: err.to_string(),
    }
}

/// serde_json reports 1-based line/column; convert to a byte offset.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(ValueVisitor)
    }
}

struct ValueVisitor;

impl<'de> Visitor<'de> for ValueVisitor {
    type Value = Value;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a JSON value")
    }

    fn visit_unit<E>(self) -> Result<Value, E> {
        Ok(Value::Null)
    }

    fn visit_bool<E>(self, v: bool) -> Result<Value, E> {
        Ok(Value::Bool(v))
    }

    fn visit_i64<E>(self, v: i64) -> Result<Value, E> {
        Ok(Value::Number(v as f64))
    }

    fn visit_u64<E>(self, v: u64) -> Result<Value, E> {
        Ok(Value::Number(v as f64))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Value, E> {
        if v.is_finite() {
            Ok(Value::Number(v))
        } else {
            Err(E::custom("non-finite number"))
        }
    }

    fn visit_str<E>(self, v: &str) -> Result<Value, E> {
        Ok(Value::String(v.to_owned()))
    }

    fn visit_string<E>(self, v: String) -> Result<Value, E> {
        Ok(Value::String(v))
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Value, A::Error> {
        let mut items = Vec::with_capacity(seq.size_hint().unwrap_or(0));
        while let Some(item) = seq.next_element()? {
            items.push(item);
        }
        Ok(Value::List(items))
    }

    fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Value, A::Error> {
        let mut map = BTreeMap::new();
        while let Some(key) = access.next_key::<String>()? {
            let value = access.next_value()?;
            if map.contains_key(&key) {
                return Err(de::Error::custom(format!("duplicate key {key:?}")));
            }
            map.insert(key, value);
        }
        Ok(Value::Map(map))
    }
}

/// An arbitrary kernel-side value before the serializability check.
///
/// `Opaque` holds things that can never cross the wire (model handles,
/// projectors, closures). Maps keep insertion order and may contain duplicate
/// keys so the check can report them.
#[derive(Clone)]
pub enum HostValue {
    Null,
    Bool(bool),
    Number(f64),
    String(String),
    List(Vec<HostValue>),
    Map(Vec<(String, HostValue)>),
    Opaque(Opaque),
}

/// A type-erased backend-only value.
#[derive(Clone)]
pub struct Opaque {
    pub(crate) inner: Arc<dyn Any + Send + Sync>,
    pub(crate) type_name: &'static str,
}

impl Opaque {
    pub fn new<T: Any + Send + Sync>(value: T) -> Self {
        Opaque {
            inner: Arc::new(value),
            type_name: std::any::type_name::<T>(),
        }
    }

    pub fn downcast_ref<T: Any>(&self) -> Option<&T> {
        self.inner.downcast_ref()
    }

    pub fn type_name(&self) -> &'static str {
        self.type_name
    }
}

impl fmt::Debug for Opaque {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Opaque<{}>", self.type_name)
    }
}

impl fmt::Debug for HostValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HostValue::Null => f.write_str("Null"),
            HostValue::Bool(b) => write!(f, "Bool({b})"),
            HostValue::Number(n) => write!(f, "Number({n})"),
            HostValue::String(s) => write!(f, "String({s:?})"),
            HostValue::List(items) => f.debug_list().entries(items).finish(),
            HostValue::Map(entries) => f
                .debug_map()
                .entries(entries.iter().map(|(k, v)| (k, v)))
                .finish(),
            HostValue::Opaque(o) => o.fmt(f),
        }
    }
}

impl HostValue {
    pub fn opaque<T: Any + Send + Sync>(value: T) -> Self {
        HostValue::Opaque(Opaque::new(value))
    }
}

impl From<Value> for HostValue {
    fn from(v: Value) -> Self {
        match v {
            Value::Null => HostValue::Null,
            Value::Bool(b) => HostValue::Bool(b),
            Value::Number(n) => HostValue::Number(n),
            Value::String(s) => HostValue::String(s),
            Value::List(items) => HostValue::List(items.into_iter().map(Into::into).collect()),
            Value::Map(m) => HostValue::Map(m.into_iter().map(|(k, v)| (k, v.into())).collect()),
        }
    }
}

macro_rules! host_from_via_value {
    ($($t:ty),*) => {
        $(impl From<$t> for HostValue {
            fn from(v: $t) -> Self {
                Value::from(v).into()
            }
        })*
    };
}

host_from_via_value!(bool, i32, i64, u64, usize, &str, String);

impl From<f64> for HostValue {
    fn from(n: f64) -> Self {
        // Kept raw so the serializability check can see NaN and infinities.
        HostValue::Number(n)
    }
}

impl From<Vec<HostValue>> for HostValue {
    fn from(items: Vec<HostValue>) -> Self {
        HostValue::List(items)
    }
}

/// Why a host value cannot be sent over the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotSerializable {
    /// Dotted path to the offending element; empty for the root.
    pub path: String,
    pub reason: String,
}

impl fmt::Display for NotSerializable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = if self.path.is_empty() { "<root>" } else { &self.path };
        write!(f, "value at {path} is not serializable: {}", self.reason)
    }
}

impl std::error::Error for NotSerializable {}

/// Validates a host value and returns its canonical serializable form.
///
/// Opaque values (models, closures) must be registered as backend-only
/// attributes instead.
pub fn check_serializable(value: &HostValue) -> Result<Value, NotSerializable> {
    let mut path = Vec::new();
    check_at(value, &mut path)
}

enum Segment<'a> {
    Key(&'a str),
    Index(usize),
}

fn render_path(path: &[Segment<'_>]) -> String {
    let mut out = String::new();
    for seg in path {
        match seg {
            Segment::Key(k) => {
                if !out.is_empty() {
                    out.push('.');
                }
                out.push_str(k);
            }
            Segment::Index(i) => {
                out.push('[');
                out.push_str(&i.to_string());
                out.push(']');
            }
        }
    }
    out
}

fn check_at<'a>(value: &'a HostValue, path: &mut Vec<Segment<'a>>) -> Result<Value, NotSerializable> {
    let fail = |path: &[Segment<'_>], reason: String| NotSerializable {
        path: render_path(path),
        reason,
    };
    Ok(match value {
        HostValue::Null => Value::Null,
        HostValue::Bool(b) => Value::Bool(*b),
        HostValue::Number(n) if n.is_finite() => Value::Number(*n),
        HostValue::Number(_) => return Err(fail(path, "non-finite number".into())),
        HostValue::String(s) => Value::String(s.clone()),
        HostValue::List(items) => {
            let mut out = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                path.push(Segment::Index(i));
                out.push(check_at(item, path)?);
                path.pop();
            }
            Value::List(out)
        }
        HostValue::Map(entries) => {
            let mut out = BTreeMap::new();
            for (k, v) in entries {
                path.push(Segment::Key(k));
                if out.contains_key(k) {
                    return Err(fail(path, "duplicate key".into()));
                }
                let checked = check_at(v, path)?;
                path.pop();
                out.insert(k.clone(), checked);
            }
            Value::Map(out)
        }
        HostValue::Opaque(o) => {
            return Err(fail(
                path,
                format!("opaque value of type {} has no wire form", o.type_name),
            ))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_value_is_accepted_unchanged() {
        let host = HostValue::Map(vec![
            ("a".into(), HostValue::List(vec![1.into(), 2.into()])),
            ("b".into(), "x".into()),
        ]);
        let v = check_serializable(&host).unwrap();
        assert_eq!(v.encode(), r#"{"a":[1,2],"b":"x"}"#);
    }

    #[test]
    fn closure_is_rejected_at_root() {
        let f: fn(u32) -> u32 = |x| x + 1;
        let err = check_serializable(&HostValue::opaque(f)).unwrap_err();
        assert_eq!(err.path, "");
        assert!(err.reason.contains("opaque"));
    }

    #[test]
    fn nan_is_rejected_with_path() {
        let host = HostValue::Map(vec![("x".into(), HostValue::Number(f64::NAN))]);
        let err = check_serializable(&host).unwrap_err();
        assert_eq!(err.path, "x");
        assert_eq!(err.reason, "non-finite number");

        let nested = HostValue::Map(vec![(
            "pts".into(),
            HostValue::List(vec![1.into(), HostValue::Number(f64::INFINITY)]),
        )]);
        assert_eq!(check_serializable(&nested).unwrap_err().path, "pts[1]");
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let host = HostValue::Map(vec![("k".into(), 1.into()), ("k".into(), 2.into())]);
        assert_eq!(check_serializable(&host).unwrap_err().reason, "duplicate key");
        assert!(Value::decode(r#"{"k":1,"k":2}"#).is_err());
    }

    #[test]
    fn numbers_use_shortest_form() {
        let cases = [
            (1.0, "1"),
            (-3.0, "-3"),
            (0.1, "0.1"),
            (-0.0, "0"),
            (1e300, "1e300"),
            (1e16, "1e16"),
            (123456.5, "123456.5"),
            (2.5e-8, "2.5e-8"),
            (9007199254740993.0, "9007199254740992"),
        ];
        for (n, text) in cases {
            assert_eq!(Value::Number(n).encode(), text, "{n}");
        }
        assert_eq!(Value::decode("1e300").unwrap(), Value::Number(1e300));
    }

    #[test]
    fn keys_are_sorted_and_strings_escaped() {
        let v = Value::decode("{\"b\": 1, \"a\": [true, null, \"q\\\"\\n\"]}").unwrap();
        assert_eq!(v.encode(), r#"{"a":[true,null,"q\"\n"],"b":1}"#);
    }

    #[test]
    fn malformed_reports_offset() {
        match Value::decode("{\"a\":\n [1,}") {
            Err(WireError::Malformed { offset, .. }) => assert!((7..=11).contains(&offset)),
            other => panic!("{other:?}"),
        }
    }
}
