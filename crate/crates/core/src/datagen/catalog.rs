//! Benchmark queries with the schemas they run against.
//!
//! `q1`..`q21` use the synthetic relations `R1`..`R7`; `Q1`..`Q6` use the
//! food-inspection schema with its extra `Name -> Zip` dependency.

use thiserror::Error;

use crate::query::{parse_constraints, parse_query, DenialConstraint, QueryError, UnionQuery};
use crate::schema::{Schema, SchemaError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub schema: String,
    pub constraints: &'static str,
    pub query: &'static str,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown catalog query `{0}`")]
    Unknown(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Query(#[from] QueryError),
}

const R1: &str = "R1(A1* text, A2 text, A3 integer)";
const R2: &str = "R2(A1* text, A2 text, A3 integer)";
const R3: &str = "R3(A1* text, A2 text)";
const R4_ONE: &str = "R4(A1* text, A2 text, A3 integer)";
const R4_TWO: &str = "R4(A1* text, A2* text, A3 integer)";
const R5: &str = "R5(A1* text, A2 text, A3 integer)";
const R6: &str = "R6(A1* text, A2 text)";
const R7: &str = "R7(A1* text, A2 text)";

const FOOD: &str = "\
NY_Insp(LicenseNo* text, Risk text, InspDate* text, InspType* text, Result text)
NY_Rest(Name text, LicenseNo* text, Cuisine text, Address text, Zip text)
CH_Insp(LicenseNo* text, Risk text, InspDate* text, InspType* text, Result text)
CH_Rest(Name text, LicenseNo* text, Facility text, Address text, Zip text)
";

const FOOD_FD: &str = "CH_Rest: Name -> Zip\n";

macro_rules! synthetic {
    ($name:literal, [$($rel:ident),+], $q:literal) => {
        (
            $name,
            &[$($rel),+] as &[&str],
            $q,
        )
    };
}

static SYNTHETIC: &[(&str, &[&str], &str)] = &[
    synthetic!("q1", [R1, R2], "q1(z) :- R1(x, y, z), R2(y, v, w)"),
    synthetic!("q2", [R1, R2], "q2(z, w) :- R1(x, y, z), R2(y, v, w)"),
    synthetic!("q3", [R1, R3, R2], "q3(z) :- R1(x, y, z), R3(y, v), R2(v, u, d)"),
    synthetic!(
        "q4",
        [R1, R3, R2],
        "q4(z, d) :- R1(x, y, z), R3(y, v), R2(v, u, d)"
    ),
    synthetic!("q5", [R1, R4_TWO], "q5(z) :- R1(x, y, z), R4(y, v, w)"),
    synthetic!(
        "q6",
        [R1, R2, R5],
        "q6(z) :- R1(x, y, z), R2(x2, y, w), R5(x, y, d)"
    ),
    synthetic!(
        "q7",
        [R1, R2, R5],
        "q7(z) :- R1(x, y, z), R2(y, x, w), R5(x, y, d)"
    ),
    synthetic!("q8", [R1, R2], "q8(z, w) :- R1(x, y, z), R2(y, x, w)"),
    synthetic!(
        "q9",
        [R1, R2, R4_ONE],
        "q9(z) :- R1(x, y, z), R2(y, x, w), R4(y, u, d)"
    ),
    synthetic!(
        "q10",
        [R1, R2, R4_ONE],
        "q10(z, w, d) :- R1(x, y, z), R2(y, x, w), R4(y, u, d)"
    ),
    synthetic!("q11", [R1, R2], "q11(z) :- R1(x, y, z), R2(y, x, w)"),
    synthetic!(
        "q12",
        [R3, R6, R1, R4_TWO],
        "q12(v, d) :- R3(x, y), R6(y, z), R1(z, x, d), R4(x, u, v)"
    ),
    synthetic!(
        "q13",
        [R3, R6, R7, R4_TWO],
        "q13(v) :- R3(x, y), R6(y, z), R7(z, x), R4(x, u, v)"
    ),
    synthetic!(
        "q14",
        [R3, R6, R1, R7],
        "q14(d) :- R3(x, y), R6(y, z), R1(z, x, d), R7(x, u)"
    ),
    synthetic!("q15", [R1, R2], "q15(z) :- R1(x, y, z), R2(x2, y, w)"),
    synthetic!("q16", [R1, R2], "q16(z, w) :- R1(x, y, z), R2(x2, y, w)"),
    synthetic!(
        "q17",
        [R1, R2, R4_ONE],
        "q17(z) :- R1(x, y, z), R2(x2, y, w), R4(y, u, d)"
    ),
    synthetic!(
        "q18",
        [R1, R2, R4_ONE],
        "q18(z, w) :- R1(x, y, z), R2(x2, y, w), R4(y, u, d)"
    ),
    synthetic!(
        "q19",
        [R1, R2, R4_ONE],
        "q19(z, w, d) :- R1(x, y, z), R2(x2, y, w), R4(y, u, d)"
    ),
    synthetic!(
        "q20",
        [R1, R2, R4_ONE, R3],
        "q20(z) :- R1(x, y, z), R2(x2, y, w), R4(y, u, d), R3(u, v)"
    ),
    synthetic!(
        "q21",
        [R1, R2, R4_ONE, R3],
        "q21(z, w) :- R1(x, y, z), R2(x2, y, w), R4(y, u, d), R3(u, v)"
    ),
];

static FOOD_QUERIES: &[(&str, &str)] = &[
    ("Q1", "Q1() :- NY_Rest(x, y, z, w, v), CH_Rest(x, y2, z2, w2, v2)"),
    (
        "Q2",
        "Q2(x) :- NY_Rest(x, y, z, w, v), CH_Rest(x, y2, z2, w2, v2)",
    ),
    (
        "Q3",
        "Q3(x) :- NY_Rest(x, y, z, w, v), CH_Rest(x, y2, z2, w2, v2), \
         NY_Insp(y, q, r, s, t), CH_Insp(y2, q2, r, s2, t2)",
    ),
    (
        "Q4",
        "Q4(x, y) :- CH_Rest(x, y, z, w, v), CH_Insp(y, q, r, s, 'Pass')",
    ),
    (
        "Q5",
        "Q5(x) :- CH_Rest(x, y, z, w, v), CH_Insp(y, q, r, s, 'Fail') ;\n\
         Q5(x) :- NY_Rest(x, y, z, w, v), NY_Insp(y, q, r, s, 'Fail')",
    ),
    (
        "Q6",
        "Q6(x, v) :- CH_Rest(x, y, z, w, v), NY_Rest(x, y2, z2, w2, v2), \
         NY_Insp(y2, 'Not Critical', q, r, s)",
    ),
];

/// Names in catalog order.
pub fn catalog_names() -> Vec<&'static str> {
    SYNTHETIC
        .iter()
        .map(|(n, _, _)| *n)
        .chain(FOOD_QUERIES.iter().map(|(n, _)| *n))
        .collect()
}

/// Expand `q1-q7`, `q3`, `all`, `Q1-Q6` style selections, comma separated.
pub fn select(spec: &str) -> Result<Vec<&'static str>, CatalogError> {
    let names = catalog_names();
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if part == "all" {
            out.extend(names.iter().copied());
            continue;
        }
        if let Some((a, b)) = part.split_once('-') {
            let i = names.iter().position(|n| *n == a.trim());
            let j = names.iter().position(|n| *n == b.trim());
            match (i, j) {
                (Some(i), Some(j)) if i <= j => out.extend(&names[i..=j]),
                _ => return Err(CatalogError::Unknown(part.to_string())),
            }
        } else {
            let n = names
                .iter()
                .find(|n| **n == part)
                .ok_or_else(|| CatalogError::Unknown(part.to_string()))?;
            out.push(n);
        }
    }
    Ok(out)
}

pub fn entry(name: &str) -> Result<CatalogEntry, CatalogError> {
    if let Some((n, rels, q)) = SYNTHETIC.iter().find(|(n, _, _)| *n == name) {
        return Ok(CatalogEntry {
            name: n,
            schema: format!("{}\n", rels.join("\n")),
            constraints: "",
            query: q,
        });
    }
    if let Some((n, q)) = FOOD_QUERIES.iter().find(|(n, _)| *n == name) {
        return Ok(CatalogEntry {
            name: n,
            schema: FOOD.to_string(),
            constraints: FOOD_FD,
            query: q,
        });
    }
    Err(CatalogError::Unknown(name.to_string()))
}

/// Parsed form of a catalog entry.
pub struct CatalogQuery {
    pub entry: CatalogEntry,
    pub schema: Schema,
    pub dcs: Vec<DenialConstraint>,
    pub query: UnionQuery,
}

pub fn query_catalog(name: &str) -> Result<CatalogQuery, CatalogError> {
    let entry = entry(name)?;
    let schema = Schema::parse(&entry.schema)?;
    let dcs = parse_constraints(entry.constraints, &schema)?;
    let query = parse_query(entry.query, &schema)?;
    Ok(CatalogQuery {
        entry,
        schema,
        dcs,
        query,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_parses() {
        for n in catalog_names() {
            let c = query_catalog(n).unwrap_or_else(|e| panic!("{n}: {e}"));
            assert!(!c.query.disjuncts.is_empty());
        }
        assert_eq!(catalog_names().len(), 27);
    }

    #[test]
    fn shapes() {
        let q1 = query_catalog("q1").unwrap();
        assert_eq!(q1.query.arity(), 1);
        assert_eq!(q1.query.disjuncts[0].atoms.len(), 2);
        assert!(q1.schema.relations().iter().all(|r| r.key == vec![0]));

        let q8 = query_catalog("q8").unwrap();
        assert_eq!(q8.query.arity(), 2);
        assert_eq!(
            q8.query.disjuncts[0].to_string(),
            "q(z, w) :- R1(x, y, z), R2(y, x, w)"
        );

        let q5 = query_catalog("q5").unwrap();
        let r4 = q5.schema.lookup("R4").unwrap();
        assert_eq!(q5.schema.relation(r4).key, vec![0, 1]);

        let big5 = query_catalog("Q5").unwrap();
        assert_eq!(big5.query.disjuncts.len(), 2);
        assert!(big5.entry.query.contains("'Fail'"));
        assert_eq!(big5.dcs.len(), 1);
        assert!(query_catalog("Q1").unwrap().query.is_boolean());
    }

    #[test]
    fn selections() {
        assert_eq!(select("q1-q3").unwrap(), vec!["q1", "q2", "q3"]);
        assert_eq!(select("q2,Q1").unwrap(), vec!["q2", "Q1"]);
        assert_eq!(select("all").unwrap().len(), 27);
        assert!(select("q0").is_err());
        assert!(entry("nope").is_err());
    }
}
