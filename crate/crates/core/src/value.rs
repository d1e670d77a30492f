//! Typed attribute values.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Column kind declared in a relation schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Text,
    Integer,
    Decimal,
}

impl ValueKind {
    pub fn parse(s: &str) -> Option<ValueKind> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "string" | "varchar" => Some(ValueKind::Text),
            "integer" | "int" | "bigint" => Some(ValueKind::Integer),
            "decimal" | "numeric" | "real" | "float" => Some(ValueKind::Decimal),
            _ => None,
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, ValueKind::Integer | ValueKind::Decimal)
    }

    /// Whether values of the two kinds can be compared with a builtin.
    pub fn comparable_with(self, other: ValueKind) -> bool {
        self == other || (self.is_numeric() && other.is_numeric())
    }

    pub fn name(self) -> &'static str {
        match self {
            ValueKind::Text => "text",
            ValueKind::Integer => "integer",
            ValueKind::Decimal => "decimal",
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single attribute value. Text is reference counted so facts and
/// bindings can share it cheaply.
#[derive(Debug, Clone)]
pub enum Value {
    Text(Arc<str>),
    Integer(i64),
    Decimal(f64),
}

impl Value {
    pub fn text(s: impl AsRef<str>) -> Value {
        Value::Text(Arc::from(s.as_ref()))
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Text(_) => ValueKind::Text,
            Value::Integer(_) => ValueKind::Integer,
            Value::Decimal(_) => ValueKind::Decimal,
        }
    }

    /// Parse a raw field as the given kind. Surrounding whitespace is
    /// ignored for numeric kinds only.
    pub fn parse_as(raw: &str, kind: ValueKind) -> Option<Value> {
        match kind {
            ValueKind::Text => Some(Value::text(raw)),
            ValueKind::Integer => raw.trim().parse::<i64>().ok().map(Value::Integer),
            ValueKind::Decimal => raw
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(|v| Value::Decimal(normalize_zero(v))),
        }
    }

    /// Convert to the column kind where that is lossless (integer literal
    /// in a decimal column).
    pub fn coerce_to(&self, kind: ValueKind) -> Option<Value> {
        match (self, kind) {
            (v, k) if v.kind() == k => Some(v.clone()),
            (Value::Integer(i), ValueKind::Decimal) => Some(Value::Decimal(*i as f64)),
            _ => None,
        }
    }

    /// Comparison used by builtin predicates: byte order on text, numeric
    /// order across integer and decimal. `None` for text against numbers.
    pub fn compare(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Text(a), Value::Text(b)) => Some(a.as_bytes().cmp(b.as_bytes())),
            (Value::Integer(a), Value::Integer(b)) => Some(a.cmp(b)),
            (Value::Decimal(a), Value::Decimal(b)) => Some(a.total_cmp(b)),
            (Value::Integer(a), Value::Decimal(b)) => Some((*a as f64).total_cmp(b)),
            (Value::Decimal(a), Value::Integer(b)) => Some(a.total_cmp(&(*b as f64))),
            _ => None,
        }
    }

    fn tag(&self) -> u8 {
        match self {
            Value::Text(_) => 0,
            Value::Integer(_) => 1,
            Value::Decimal(_) => 2,
        }
    }
}

fn normalize_zero(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Text(a), Value::Text(b)) => a == b,
            (Value::Integer(a), Value::Integer(b)) => a == b,
            (Value::Decimal(a), Value::Decimal(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.tag().hash(state);
        match self {
            Value::Text(s) => s.hash(state),
            Value::Integer(i) => i.hash(state),
            Value::Decimal(d) => d.to_bits().hash(state),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Text(a), Value::Text(b)) => a.as_bytes().cmp(b.as_bytes()),
            (Value::Integer(a), Value::Integer(b)) => a.cmp(b),
            (Value::Decimal(a), Value::Decimal(b)) => a.total_cmp(b),
            _ => self.tag().cmp(&other.tag()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Text(s) => f.write_str(s),
            Value::Integer(i) => write!(f, "{i}"),
            Value::Decimal(d) => write!(f, "{d}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Text(s) => serializer.serialize_str(s),
            Value::Integer(i) => serializer.serialize_i64(*i),
            Value::Decimal(d) => serializer.serialize_f64(*d),
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let json = serde_json::Value::deserialize(deserializer)?;
        match json {
            serde_json::Value::String(s) => Ok(Value::text(s)),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Value::Integer(i))
                } else {
                    n.as_f64()
                        .map(Value::Decimal)
                        .ok_or_else(|| serde::de::Error::custom("unrepresentable number"))
                }
            }
            other => Err(serde::de::Error::custom(format!(
                "expected string or number, found {other}"
            ))),
        }
    }
}

/// An answer tuple.
pub type Tuple = Vec<Value>;

pub fn format_tuple(t: &[Value]) -> String {
    let parts: Vec<String> = t.iter().map(|v| v.to_string()).collect();
    format!("({})", parts.join(", "))
}
