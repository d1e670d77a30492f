//! Loading a problem (schema, data directory, constraints, query) from disk.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::instance::{ingest_dir, IngestError, Instance};
use crate::query::{parse_constraints, parse_query, DenialConstraint, QueryError, UnionQuery};
use crate::schema::{Schema, SchemaError};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Schema { path: PathBuf, source: SchemaError },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{path}: {source}")]
    Query { path: PathBuf, source: QueryError },
}

pub struct Loaded {
    pub instance: Instance,
    pub dcs: Vec<DenialConstraint>,
    pub query: Option<UnionQuery>,
}

fn read(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_schema(path: &Path) -> Result<Schema, LoadError> {
    Schema::parse(&read(path)?).map_err(|source| LoadError::Schema {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load(
    schema: &Path,
    data: &Path,
    constraints: Option<&Path>,
    query: Option<&Path>,
) -> Result<Loaded, LoadError> {
    let instance = ingest_dir(load_schema(schema)?, data)?;
    let dcs = match constraints {
        Some(p) => parse_constraints(&read(p)?, instance.schema()).map_err(|source| LoadError::Query {
            path: p.to_path_buf(),
            source,
        })?,
        None => Vec::new(),
    };
    let query = match query {
        Some(p) => Some(
            parse_query(&read(p)?, instance.schema()).map_err(|source| LoadError::Query {
                path: p.to_path_buf(),
                source,
            })?,
        ),
        None => None,
    };
    Ok(Loaded { instance, dcs, query })
}
