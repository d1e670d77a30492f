//! In-memory relational instances with stable fact identifiers.

use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{RelId, RelationSchema, Schema};
use crate::value::Value;

/// Global fact identifier. Real facts are numbered densely from 1 in
/// ingestion order; 0 is reserved for the auxiliary always-true fact used by
/// near-violations of facts that are violations on their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FactId(pub u32);

impl FactId {
    pub const TRUE: FactId = FactId(0);

    pub fn is_true_fact(self) -> bool {
        self.0 == 0
    }

    fn slot(self) -> usize {
        debug_assert!(self.0 > 0);
        self.0 as usize - 1
    }
}

impl fmt::Display for FactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_true_fact() {
            f.write_str("f_true")
        } else {
            write!(f, "f{}", self.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fact {
    pub id: FactId,
    pub relation: RelId,
    pub values: Box<[Value]>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed CSV: {message}")]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}:1: header {found:?} does not match schema attributes {expected:?}")]
    Header {
        path: PathBuf,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("{path}:{line}: expected {expected} fields, found {found}")]
    Arity {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("{path}:{line}: column `{column}`: cannot parse {value:?} as {kind}")]
    BadValue {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
        kind: crate::value::ValueKind,
    },
    #[error("{path}:{line}: column `{column}` is empty (NULL values are not allowed)")]
    Null {
        path: PathBuf,
        line: u64,
        column: String,
    },
    #[error("{path}: unknown relation `{relation}`")]
    UnknownRelation { path: PathBuf, relation: String },
    #[error("missing data file {path} for relation `{relation}`")]
    MissingFile { path: PathBuf, relation: String },
    #[error("relation `{relation}`: {message}")]
    Invalid { relation: String, message: String },
}

/// Immutable set of facts over a schema.
#[derive(Debug, Clone)]
pub struct Instance {
    schema: Schema,
    facts: Vec<Fact>,
    by_relation: Vec<Vec<FactId>>,
}

impl Instance {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn fact(&self, id: FactId) -> &Fact {
        &self.facts[id.slot()]
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn fact_ids(&self) -> impl Iterator<Item = FactId> + '_ {
        self.facts.iter().map(|f| f.id)
    }

    pub fn relation_facts(&self, rel: RelId) -> &[FactId] {
        &self.by_relation[rel.index()]
    }

    pub fn relation_schema(&self, id: FactId) -> &RelationSchema {
        self.schema.relation(self.fact(id).relation)
    }

    pub fn active_domain(&self) -> BTreeSet<Value> {
        self.facts.iter().flat_map(|f| f.values.iter().cloned()).collect()
    }

    /// Key-equal groups of one relation: facts share a block iff they agree
    /// on every key position. Blocks are ordered by their smallest fact id.
    /// A relation without a declared key yields singleton blocks.
    pub fn key_equal_groups(&self, rel: RelId) -> Vec<Vec<FactId>> {
        self.groups_in(rel, None)
    }

    fn key_of<'a>(&'a self, rs: &RelationSchema, id: FactId) -> Vec<&'a Value> {
        let f = self.fact(id);
        rs.key.iter().map(|&p| &f.values[p]).collect()
    }

    /// Blocks of `rel`, optionally only those whose key occurs in `seeds`.
    fn groups_in(&self, rel: RelId, seeds: Option<&[FactId]>) -> Vec<Vec<FactId>> {
        let rs = self.schema.relation(rel);
        let ids = self.relation_facts(rel);
        if !rs.has_key() {
            return match seeds {
                None => ids.iter().map(|&id| vec![id]).collect(),
                Some(s) => s.iter().map(|&id| vec![id]).collect(),
            };
        }
        let mut slot: FxHashMap<Vec<&Value>, usize> = FxHashMap::default();
        let mut groups: Vec<Vec<FactId>> = Vec::new();
        match seeds {
            None => {
                slot.reserve(ids.len());
                for &id in ids {
                    match slot.entry(self.key_of(rs, id)) {
                        Entry::Occupied(e) => groups[*e.get()].push(id),
                        Entry::Vacant(e) => {
                            e.insert(groups.len());
                            groups.push(vec![id]);
                        }
                    }
                }
            }
            Some(seeds) => {
                for &id in seeds {
                    slot.entry(self.key_of(rs, id)).or_insert(usize::MAX);
                }
                let mut key = Vec::with_capacity(rs.key.len());
                for &id in ids {
                    let f = self.fact(id);
                    key.clear();
                    key.extend(rs.key.iter().map(|&p| &f.values[p]));
                    if let Some(g) = slot.get_mut(&key) {
                        if *g == usize::MAX {
                            *g = groups.len();
                            groups.push(Vec::new());
                        }
                        groups[*g].push(id);
                    }
                }
            }
        }
        groups
    }

    /// Key-equal groups that contain at least one of `facts`, in the order
    /// of [`Instance::all_key_groups`].
    pub fn key_groups_containing(&self, facts: &[FactId]) -> Vec<Vec<FactId>> {
        let mut per_rel: Vec<Vec<FactId>> = vec![Vec::new(); self.by_relation.len()];
        for &f in facts {
            per_rel[self.fact(f).relation.index()].push(f);
        }
        let mut out = Vec::new();
        for r in self.schema.ids() {
            let mut seeds = std::mem::take(&mut per_rel[r.index()]);
            if seeds.is_empty() {
                continue;
            }
            seeds.sort_unstable();
            seeds.dedup();
            out.extend(self.groups_in(r, Some(&seeds)));
        }
        out
    }

    /// Key-equal groups of a relation looked up by name.
    pub fn key_equal_groups_of(&self, relation: &str) -> Result<Vec<Vec<FactId>>, IngestError> {
        let rel = self
            .schema
            .lookup(relation)
            .ok_or_else(|| IngestError::UnknownRelation {
                path: PathBuf::new(),
                relation: relation.to_string(),
            })?;
        Ok(self.key_equal_groups(rel))
    }

    /// Key-equal groups of every relation, in schema order.
    pub fn all_key_groups(&self) -> Vec<Vec<FactId>> {
        self.schema.ids().flat_map(|r| self.key_equal_groups(r)).collect()
    }

    /// Sub-instance keeping only the given facts, renumbered densely in
    /// their original order. Returns the new instance and the old ids of
    /// the kept facts, indexed by new id - 1.
    pub fn restrict(&self, keep: impl Fn(FactId) -> bool) -> (Instance, Vec<FactId>) {
        let mut b = InstanceBuilder::new(self.schema.clone());
        let mut origin = Vec::new();
        for f in &self.facts {
            if keep(f.id) {
                b.push_unchecked(f.relation, f.values.clone());
                origin.push(f.id);
            }
        }
        (b.finish(), origin)
    }

    pub fn display_fact(&self, id: FactId) -> String {
        if id.is_true_fact() {
            return "f_true".into();
        }
        let f = self.fact(id);
        let vals: Vec<String> = f.values.iter().map(|v| format!("{v:?}")).collect();
        format!(
            "{}: {}({})",
            id,
            self.schema.relation(f.relation).name,
            vals.join(", ")
        )
    }

    /// Write one CSV file per relation into `dir`, named `<Relation>.csv`.
    pub fn write_csv_dir(&self, dir: &Path) -> Result<(), IngestError> {
        fs::create_dir_all(dir).map_err(|source| IngestError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for rel in self.schema.ids() {
            let rs = self.schema.relation(rel);
            let path = dir.join(format!("{}.csv", rs.name));
            let io_err = |e: csv::Error| IngestError::Csv {
                path: path.clone(),
                line: 0,
                message: e.to_string(),
            };
            let mut w = csv::Writer::from_path(&path).map_err(io_err)?;
            w.write_record(rs.attributes.iter().map(|a| a.name.as_str()))
                .map_err(io_err)?;
            for &id in self.relation_facts(rel) {
                let f = self.fact(id);
                w.write_record(f.values.iter().map(|v| v.to_string()))
                    .map_err(io_err)?;
            }
            w.flush().map_err(|source| IngestError::Io {
                path: path.clone(),
                source,
            })?;
        }
        Ok(())
    }
}

/// Accumulates facts with set semantics and assigns fact ids in insertion
/// order.
#[derive(Debug)]
pub struct InstanceBuilder {
    schema: Schema,
    facts: Vec<Fact>,
    by_relation: Vec<Vec<FactId>>,
    seen: HashSet<(RelId, Box<[Value]>)>,
}

impl InstanceBuilder {
    pub fn new(schema: Schema) -> Self {
        let n = schema.len();
        InstanceBuilder {
            schema,
            facts: Vec::new(),
            by_relation: vec![Vec::new(); n],
            seen: HashSet::new(),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Insert a fact, coercing values to the column kinds. Returns the new
    /// id, or `None` when an identical fact already exists.
    pub fn insert(&mut self, relation: &str, values: Vec<Value>) -> Result<Option<FactId>, IngestError> {
        let rel = self
            .schema
            .lookup(relation)
            .ok_or_else(|| IngestError::UnknownRelation {
                path: PathBuf::new(),
                relation: relation.to_string(),
            })?;
        let rs = self.schema.relation(rel);
        if values.len() != rs.arity() {
            return Err(IngestError::Invalid {
                relation: relation.to_string(),
                message: format!("expected {} values, found {}", rs.arity(), values.len()),
            });
        }
        let mut typed = Vec::with_capacity(values.len());
        for (v, a) in values.iter().zip(&rs.attributes) {
            let c = v.coerce_to(a.kind).ok_or_else(|| IngestError::Invalid {
                relation: relation.to_string(),
                message: format!("value {v:?} is not of kind {} for `{}`", a.kind, a.name),
            })?;
            typed.push(c);
        }
        Ok(self.push(rel, typed.into_boxed_slice()))
    }

    /// Insert already-typed values, deduplicating.
    pub fn push(&mut self, rel: RelId, values: Box<[Value]>) -> Option<FactId> {
        if !self.seen.insert((rel, values.clone())) {
            return None;
        }
        Some(self.push_unchecked(rel, values))
    }

    fn push_unchecked(&mut self, rel: RelId, values: Box<[Value]>) -> FactId {
        let id = FactId(self.facts.len() as u32 + 1);
        self.facts.push(Fact {
            id,
            relation: rel,
            values,
        });
        self.by_relation[rel.index()].push(id);
        id
    }

    /// Read one CSV file for `relation`. The header must list the schema's
    /// attribute names in order.
    pub fn load_csv(&mut self, relation: &str, path: &Path) -> Result<usize, IngestError> {
        let rel = self
            .schema
            .lookup(relation)
            .ok_or_else(|| IngestError::UnknownRelation {
                path: path.to_path_buf(),
                relation: relation.to_string(),
            })?;
        let file = fs::File::open(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(file);
        let rs = self.schema.relation(rel).clone();
        let mut added = 0;
        let mut records = reader.records();
        let header = match records.next() {
            None => {
                return Err(IngestError::Header {
                    path: path.to_path_buf(),
                    expected: rs.attributes.iter().map(|a| a.name.clone()).collect(),
                    found: Vec::new(),
                })
            }
            Some(r) => r.map_err(|e| csv_error(path, &e))?,
        };
        let found: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
        let expected: Vec<String> = rs.attributes.iter().map(|a| a.name.clone()).collect();
        if found != expected {
            return Err(IngestError::Header {
                path: path.to_path_buf(),
                expected,
                found,
            });
        }
        for record in records {
            let record = record.map_err(|e| csv_error(path, &e))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() == 1 && record.get(0) == Some("") {
                // blank line
                continue;
            }
            if record.len() != rs.arity() {
                return Err(IngestError::Arity {
                    path: path.to_path_buf(),
                    line,
                    expected: rs.arity(),
                    found: record.len(),
                });
            }
            let mut values = Vec::with_capacity(rs.arity());
            for (raw, attr) in record.iter().zip(&rs.attributes) {
                if raw.is_empty() {
                    return Err(IngestError::Null {
                        path: path.to_path_buf(),
                        line,
                        column: attr.name.clone(),
                    });
                }
                let v = Value::parse_as(raw, attr.kind).ok_or_else(|| IngestError::BadValue {
                    path: path.to_path_buf(),
                    line,
                    column: attr.name.clone(),
                    value: raw.to_string(),
                    kind: attr.kind,
                })?;
                values.push(v);
            }
            if self.push(rel, values.into_boxed_slice()).is_some() {
                added += 1;
            }
        }
        Ok(added)
    }

    pub fn finish(self) -> Instance {
        Instance {
            schema: self.schema,
            facts: self.facts,
            by_relation: self.by_relation,
        }
    }
}

fn csv_error(path: &Path, e: &csv::Error) -> IngestError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    IngestError::Csv {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

/// Load `<dir>/<Relation>.csv` for every relation of the schema, in schema
/// order. Any other `.csv` file in the directory is rejected as an unknown
/// relation.
pub fn ingest_dir(schema: Schema, dir: &Path) -> Result<Instance, IngestError> {
    let entries = fs::read_dir(dir).map_err(|source| IngestError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| IngestError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) == Some("csv") {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            if schema.lookup(&stem).is_none() {
                return Err(IngestError::UnknownRelation { path, relation: stem });
            }
        }
    }
    let names: Vec<String> = schema.relations().iter().map(|r| r.name.clone()).collect();
    let mut b = InstanceBuilder::new(schema);
    for name in names {
        let path = dir.join(format!("{name}.csv"));
        if !path.exists() {
            return Err(IngestError::MissingFile { path, relation: name });
        }
        b.load_csv(&name, &path)?;
    }
    Ok(b.finish())
}

/// Load explicitly named files, one `(relation, path)` pair per relation.
pub fn ingest_files(schema: Schema, files: &[(String, PathBuf)]) -> Result<Instance, IngestError> {
    let mut b = InstanceBuilder::new(schema);
    for (rel, path) in files {
        b.load_csv(rel, path)?;
    }
    Ok(b.finish())
}
