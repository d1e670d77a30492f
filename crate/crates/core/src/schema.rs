//! Relation schemas and the schema text format.
//!
//! One relation per line:
//!
//! ```text
//! # comment
//! Flights(CODE* text, DATE* text, AIRLINE text, FROM text, TO text)
//! ```
//!
//! A `*` directly after an attribute name marks it as part of the key.
//! Kinds are `text`, `integer` (alias `int`) and `decimal`. Blank lines and
//! lines starting with `#` are ignored; a trailing `;` or `.` is allowed.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::ValueKind;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("schema line {line}: {message}")]
pub struct SchemaError {
    pub line: usize,
    pub message: String,
}

/// Index of a relation within its [`Schema`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelId(pub u32);

impl RelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: ValueKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationSchema {
    pub name: String,
    pub attributes: Vec<Attribute>,
    /// Zero-based key positions in ascending order. Empty when the relation
    /// has no declared key.
    pub key: Vec<usize>,
}

impl RelationSchema {
    pub fn new(
        name: impl Into<String>,
        attributes: Vec<Attribute>,
        key: Vec<usize>,
    ) -> Result<Self, SchemaError> {
        let name = name.into();
        let mut seen = HashMap::new();
        for (i, a) in attributes.iter().enumerate() {
            if seen.insert(a.name.as_str(), i).is_some() {
                return Err(SchemaError {
                    line: 0,
                    message: format!("duplicate attribute `{}` in `{name}`", a.name),
                });
            }
        }
        if attributes.is_empty() {
            return Err(SchemaError {
                line: 0,
                message: format!("relation `{name}` has no attributes"),
            });
        }
        let mut key = key;
        key.sort_unstable();
        key.dedup();
        if let Some(&k) = key.iter().find(|&&k| k >= attributes.len()) {
            return Err(SchemaError {
                line: 0,
                message: format!("key position {} out of range for `{name}`", k + 1),
            });
        }
        Ok(RelationSchema {
            name,
            attributes,
            key,
        })
    }

    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn has_key(&self) -> bool {
        !self.key.is_empty()
    }

    pub fn is_key_position(&self, pos: usize) -> bool {
        self.key.binary_search(&pos).is_ok()
    }

    pub fn non_key_positions(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.arity()).filter(|p| !self.is_key_position(*p))
    }

    pub fn position_of(&self, attribute: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == attribute)
    }
}

impl fmt::Display for RelationSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, a) in self.attributes.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let star = if self.is_key_position(i) { "*" } else { "" };
            write!(f, "{}{} {}", a.name, star, a.kind)?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schema {
    relations: Vec<RelationSchema>,
    by_name: HashMap<String, RelId>,
}

impl Schema {
    pub fn new(relations: Vec<RelationSchema>) -> Result<Self, SchemaError> {
        let mut by_name = HashMap::new();
        for (i, r) in relations.iter().enumerate() {
            if by_name.insert(r.name.clone(), RelId(i as u32)).is_some() {
                return Err(SchemaError {
                    line: 0,
                    message: format!("duplicate relation `{}`", r.name),
                });
            }
        }
        Ok(Schema { relations, by_name })
    }

    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let mut relations = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let rel = parse_relation_line(line).map_err(|message| SchemaError {
                line: line_no,
                message,
            })?;
            let rel = RelationSchema::new(rel.0, rel.1, rel.2).map_err(|e| SchemaError {
                line: line_no,
                message: e.message,
            })?;
            relations.push(rel);
        }
        Schema::new(relations).map_err(|e| SchemaError {
            line: 0,
            message: e.message,
        })
    }

    pub fn relations(&self) -> &[RelationSchema] {
        &self.relations
    }

    pub fn relation(&self, id: RelId) -> &RelationSchema {
        &self.relations[id.index()]
    }

    pub fn lookup(&self, name: &str) -> Option<RelId> {
        self.by_name.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = RelId> {
        (0..self.relations.len() as u32).map(RelId)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.relations {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

type RawRelation = (String, Vec<Attribute>, Vec<usize>);

fn parse_relation_line(line: &str) -> Result<RawRelation, String> {
    let line = line.trim_end_matches([';', '.']).trim_end();
    let open = line
        .find('(')
        .ok_or_else(|| "expected `Name(attr kind, ...)`".to_string())?;
    if !line.ends_with(')') {
        return Err("missing closing `)`".into());
    }
    let name = line[..open].trim();
    if !is_ident(name) {
        return Err(format!("invalid relation name `{name}`"));
    }
    let body = &line[open + 1..line.len() - 1];
    let mut attributes = Vec::new();
    let mut key = Vec::new();
    for (pos, part) in body.split(',').enumerate() {
        let mut words = part.split_whitespace();
        let attr = words
            .next()
            .ok_or_else(|| format!("empty attribute at position {}", pos + 1))?;
        let kind_word = words
            .next()
            .ok_or_else(|| format!("attribute `{attr}` has no kind"))?;
        if let Some(extra) = words.next() {
            return Err(format!("unexpected `{extra}` after attribute `{attr}`"));
        }
        let (attr_name, is_key) = match attr.strip_suffix('*') {
            Some(n) => (n, true),
            None => (attr, false),
        };
        if !is_ident(attr_name) {
            return Err(format!("invalid attribute name `{attr_name}`"));
        }
        let kind = ValueKind::parse(kind_word)
            .ok_or_else(|| format!("unknown kind `{kind_word}` for `{attr_name}`"))?;
        if is_key {
            key.push(pos);
        }
        attributes.push(Attribute {
            name: attr_name.to_string(),
            kind,
        });
    }
    Ok((name.to_string(), attributes, key))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_kinds() {
        let s = Schema::parse(
            "# flights\nAirlines(AIRLINE* text, COUNTRY text)\n\nTickets(PNR* text, CODE text, CLASS text, FARE integer);\n",
        )
        .unwrap();
        assert_eq!(s.len(), 2);
        let t = s.relation(s.lookup("Tickets").unwrap());
        assert_eq!(t.key, vec![0]);
        assert_eq!(t.attributes[3].kind, ValueKind::Integer);
        assert_eq!(t.non_key_positions().collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn round_trips_through_text() {
        let s = Schema::parse("R(A* text, B* integer, C decimal)").unwrap();
        assert_eq!(Schema::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(Schema::parse("R(A text, A text)").is_err());
        assert!(Schema::parse("R(A blob)").is_err());
        assert!(Schema::parse("R A text").is_err());
        assert!(Schema::parse("R(A text)\nR(B text)").is_err());
        let err = Schema::parse("R(A text)\nS(B)").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn relation_without_key() {
        let s = Schema::parse("E(src text, dst text)").unwrap();
        assert!(!s.relations()[0].has_key());
    }
}
