//! Synthetic inconsistent databases for the benchmark catalog.
//!
//! Generation runs in two phases. A consistent core is built first: a
//! planted set of query matches with fresh join values, then filler tuples
//! with fresh random keys. Inconsistency is then injected by adding tuples
//! that copy the key of a core tuple and draw new non-key values.
//!
//! Integer columns take values uniformly from `[1, rsize/10]`, text columns
//! are random alphanumeric strings of length 10.

pub mod catalog;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io;
use std::path::Path;

use rand::distributions::Alphanumeric;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::instance::{FactId, Instance, InstanceBuilder};
use crate::query::{for_each_match, DenialConstraint, Term, UnionQuery};
use crate::schema::{RelId, RelationSchema};
use crate::value::{Value, ValueKind};

pub use catalog::{catalog_names, query_catalog, select, CatalogEntry, CatalogError, CatalogQuery};

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub query: String,
    /// Tuples per relation.
    pub rsize: usize,
    /// Percentage of tuples per relation that sit in a key-equal group of
    /// size two or more.
    pub indeg: f64,
    /// Inclusive range of key-equal group sizes.
    pub ksize: (usize, usize),
    /// Planted query matches as a fraction of `rsize`.
    pub selectivity: f64,
    pub seed: u64,
}

impl GenConfig {
    pub fn new(query: &str, rsize: usize, indeg: f64, seed: u64) -> Self {
        GenConfig {
            query: query.to_string(),
            rsize,
            indeg,
            ksize: (2, 5),
            selectivity: 0.175,
            seed,
        }
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationReport {
    pub relation: String,
    pub tuples: usize,
    pub core: usize,
    pub groups: usize,
    /// Tuples in key-equal groups of size two or more.
    pub in_groups: usize,
    pub injected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenReport {
    pub query: String,
    pub rsize: usize,
    pub indeg: f64,
    pub seed: u64,
    pub planted: usize,
    /// Query matches on the consistent core.
    pub core_matches: usize,
    pub selectivity: f64,
    pub relations: Vec<RelationReport>,
}

pub struct Generated {
    pub entry: CatalogEntry,
    pub instance: Instance,
    pub dcs: Vec<DenialConstraint>,
    pub query: UnionQuery,
    pub report: GenReport,
}

impl Generated {
    /// Write `schema.txt`, `constraints.txt`, `query.txt`, `report.json`
    /// and one CSV per relation under `data/`.
    pub fn write_to(&self, dir: &Path) -> Result<(), GenError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("schema.txt"), &self.entry.schema)?;
        fs::write(dir.join("constraints.txt"), self.entry.constraints)?;
        fs::write(dir.join("query.txt"), format!("{}\n", self.entry.query))?;
        fs::write(
            dir.join("report.json"),
            serde_json::to_string_pretty(&self.report).expect("serializable"),
        )?;
        self.instance
            .write_csv_dir(&dir.join("data"))
            .map_err(|e| io::Error::other(e.to_string()))?;
        Ok(())
    }
}

/// Split `target` tuples into key-equal group sizes drawn from `lo..=hi`.
///
/// Sizes are drawn greedily. When a draw would leave a remainder below `lo`,
/// the draw is widened (or narrowed) to absorb it if that stays inside the
/// range; otherwise the remainder is dropped. The sum can therefore fall
/// short of `target` by less than `lo`.
pub fn plan_groups<R: Rng>(rng: &mut R, target: usize, lo: usize, hi: usize) -> Vec<usize> {
    let mut rem = target;
    let mut out = Vec::new();
    while rem >= lo {
        let mut k = rng.gen_range(lo..=hi).min(rem);
        let left = rem - k;
        if left > 0 && left < lo {
            if k + left <= hi {
                k += left;
            } else if k >= lo + (lo - left) {
                k -= lo - left;
            }
        }
        out.push(k);
        rem -= k;
    }
    out
}

fn random_value<R: Rng>(rng: &mut R, kind: ValueKind, int_max: i64) -> Value {
    match kind {
        ValueKind::Text => Value::text(
            rng.sample_iter(&Alphanumeric)
                .take(10)
                .map(char::from)
                .collect::<String>(),
        ),
        ValueKind::Integer => Value::Integer(rng.gen_range(1..=int_max)),
        ValueKind::Decimal => Value::Decimal(rng.gen_range(1..=int_max) as f64),
    }
}

fn key_of(rel: &RelationSchema, row: &[Value]) -> Vec<Value> {
    if rel.key.is_empty() {
        row.to_vec()
    } else {
        rel.key.iter().map(|&i| row[i].clone()).collect()
    }
}

struct RelState {
    rng: ChaCha8Rng,
    core: Vec<Vec<Value>>,
    keys: HashSet<Vec<Value>>,
    groups: Vec<usize>,
    core_target: usize,
}

const RETRIES: usize = 1000;

pub fn generate(cfg: &GenConfig) -> Result<Generated, GenError> {
    if cfg.rsize == 0 {
        return Err(GenError::Infeasible("rsize must be at least 1".into()));
    }
    if !(0.0..=100.0).contains(&cfg.indeg) {
        return Err(GenError::Infeasible(format!(
            "inDeg {} outside [0, 100]",
            cfg.indeg
        )));
    }
    let (lo, hi) = cfg.ksize;
    if lo < 2 || lo > hi {
        return Err(GenError::Infeasible(format!("group size range {lo}..={hi}")));
    }
    let cq = query_catalog(&cfg.query)?;
    let schema = cq.schema.clone();
    let int_max = (cfg.rsize as i64 / 10).max(1);
    let target = (cfg.rsize as f64 * cfg.indeg / 100.0).round() as usize;
    if target > 0 && target < lo {
        return Err(GenError::Infeasible(format!(
            "{target} inconsistent tuples cannot form a group of size {lo}..={hi}"
        )));
    }

    let mut rels: Vec<RelState> = Vec::new();
    for id in schema.ids() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(id.index() as u64 + 1);
        let groups = plan_groups(&mut rng, target, lo, hi);
        let injected: usize = groups.iter().map(|k| k - 1).sum();
        let core_target = cfg.rsize - injected;
        if groups.len() > core_target {
            return Err(GenError::Infeasible(format!(
                "{}: {} groups need more than {core_target} core tuples",
                schema.relation(id).name,
                groups.len()
            )));
        }
        rels.push(RelState {
            rng,
            core: Vec::new(),
            keys: HashSet::new(),
            groups,
            core_target,
        });
    }

    // Plant query matches with fresh join values.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut uses = vec![0usize; schema.len()];
    for cq in &cq.query.disjuncts {
        for a in &cq.atoms {
            uses[a.relation.index()] += 1;
        }
    }
    let room = schema
        .ids()
        .map(|id| rels[id.index()].core_target / uses[id.index()].max(1))
        .min()
        .unwrap_or(0);
    let planted = ((cfg.rsize as f64 * cfg.selectivity).round() as usize).min(room);
    let kinds: Vec<Vec<(String, ValueKind)>> = cq
        .query
        .disjuncts
        .iter()
        .map(|q| {
            let mut k: Vec<_> = q.variable_kinds(&schema).into_iter().collect();
            k.sort_by(|a, b| a.0.cmp(&b.0));
            k
        })
        .collect();
    for m in 0..planted {
        let d = m % cq.query.disjuncts.len();
        let q = &cq.query.disjuncts[d];
        let mut placed = false;
        for _ in 0..RETRIES {
            let mut vals = HashMap::new();
            for (v, k) in &kinds[d] {
                vals.insert(v.as_str(), random_value(&mut rng, *k, int_max));
            }
            let rows: Vec<(usize, Vec<Value>)> = q
                .atoms
                .iter()
                .map(|a| {
                    let row = a
                        .terms
                        .iter()
                        .map(|t| match t {
                            Term::Var(v) => vals[v.as_str()].clone(),
                            Term::Const(c) => c.clone(),
                        })
                        .collect();
                    (a.relation.index(), row)
                })
                .collect();
            let mut fresh: HashSet<(usize, Vec<Value>)> = HashSet::new();
            let ok = rows.iter().all(|(r, row)| {
                let k = key_of(schema.relation(RelId(*r as u32)), row);
                !rels[*r].keys.contains(&k) && fresh.insert((*r, k))
            });
            if ok {
                for (r, row) in rows {
                    rels[r]
                        .keys
                        .insert(key_of(schema.relation(RelId(r as u32)), &row));
                    rels[r].core.push(row);
                }
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(GenError::Infeasible(
                "could not plant a match with fresh keys".into(),
            ));
        }
    }

    // Filler and injection, one random stream per relation.
    let mut b = InstanceBuilder::new(schema.clone());
    let mut core_fact = vec![false];
    let mut reports = Vec::new();
    for id in schema.ids() {
        let rel = schema.relation(id);
        let st = &mut rels[id.index()];
        let rng = &mut st.rng;
        while st.core.len() < st.core_target {
            let mut done = false;
            for _ in 0..RETRIES {
                let row: Vec<Value> = rel
                    .attributes
                    .iter()
                    .map(|a| random_value(rng, a.kind, int_max))
                    .collect();
                if st.keys.insert(key_of(rel, &row)) {
                    st.core.push(row);
                    done = true;
                    break;
                }
            }
            if !done {
                return Err(GenError::Infeasible(format!("{}: key space exhausted", rel.name)));
            }
        }
        st.core.shuffle(rng);

        let originals = sample(rng, st.core.len(), st.groups.len());
        let mut injected: Vec<Vec<Value>> = Vec::new();
        for (o, &k) in originals.iter().zip(&st.groups) {
            let base = &st.core[o];
            let mut seen: HashSet<Vec<Value>> = HashSet::new();
            seen.insert(base.clone());
            while seen.len() < k {
                let mut row = base.clone();
                for (i, a) in rel.attributes.iter().enumerate() {
                    if !rel.key.contains(&i) {
                        row[i] = random_value(rng, a.kind, int_max);
                    }
                }
                if seen.insert(row.clone()) {
                    injected.push(row);
                }
                if seen.len() < k && rel.non_key_positions().next().is_none() {
                    return Err(GenError::Infeasible(format!(
                        "{} has no non-key attribute",
                        rel.name
                    )));
                }
            }
        }

        for row in &st.core {
            let id = b.push(id, row.clone().into_boxed_slice());
            if id.is_some() {
                core_fact.push(true);
            }
        }
        for row in &injected {
            if b.push(id, row.clone().into_boxed_slice()).is_some() {
                core_fact.push(false);
            }
        }
        reports.push(RelationReport {
            relation: rel.name.clone(),
            tuples: st.core.len() + injected.len(),
            core: st.core.len(),
            groups: st.groups.len(),
            in_groups: st.groups.iter().sum(),
            injected: injected.len(),
        });
    }
    let instance = b.finish();

    let mut core_matches = 0usize;
    let in_core = |f: FactId| core_fact[f.0 as usize];
    for q in &cq.query.disjuncts {
        for_each_match(q, &instance, Some(&in_core), |_, _| core_matches += 1);
    }

    let report = GenReport {
        query: cfg.query.clone(),
        rsize: cfg.rsize,
        indeg: cfg.indeg,
        seed: cfg.seed,
        planted,
        core_matches,
        selectivity: core_matches as f64 / cfg.rsize as f64,
        relations: reports,
    };
    Ok(Generated {
        entry: cq.entry,
        instance,
        dcs: cq.dcs,
        query: cq.query,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::enumerate_repairs;

    #[test]
    fn group_plans() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in [0, 2, 3, 7, 15, 100, 101] {
            let g = plan_groups(&mut rng, t, 2, 5);
            assert_eq!(g.iter().sum::<usize>(), t, "{g:?}");
            assert!(g.iter().all(|k| (2..=5).contains(k)));
        }
        let g = plan_groups(&mut rng, 15, 2, 2);
        assert_eq!(g, vec![2; 7]);
    }

    #[test]
    fn sizes_and_inconsistency() {
        let g = generate(&GenConfig::new("q2", 1000, 10.0, 9)).unwrap();
        for r in &g.report.relations {
            assert_eq!(r.tuples, 1000);
            assert_eq!(r.in_groups, 100);
            let rel = g.instance.schema().lookup(&r.relation).unwrap();
            let grouped: usize = g
                .instance
                .key_equal_groups(rel)
                .iter()
                .filter(|x| x.len() > 1)
                .map(Vec::len)
                .sum();
            assert_eq!(grouped, 100);
        }
        assert_eq!(g.report.planted, 175);
        assert!(
            (0.10..=0.25).contains(&g.report.selectivity),
            "{}",
            g.report.selectivity
        );
    }

    #[test]
    fn consistent_when_indeg_zero() {
        let g = generate(&GenConfig::new("q1", 40, 0.0, 3)).unwrap();
        assert_eq!(enumerate_repairs(&g.instance, &[], 10).unwrap().len(), 1);
    }

    #[test]
    fn deterministic() {
        let a = generate(&GenConfig::new("q7", 300, 15.0, 5)).unwrap();
        let b = generate(&GenConfig::new("q7", 300, 15.0, 5)).unwrap();
        assert_eq!(a.instance.len(), b.instance.len());
        for f in a.instance.fact_ids() {
            assert_eq!(a.instance.fact(f), b.instance.fact(f));
        }
    }

    #[test]
    fn infeasible() {
        assert!(matches!(
            generate(&GenConfig::new("q1", 10, 10.0, 0)),
            Err(GenError::Infeasible(_))
        ));
        assert!(generate(&GenConfig::new("q99", 10, 10.0, 0)).is_err());
    }
}
