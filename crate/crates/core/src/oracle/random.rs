//! Seeded random small cases for differential testing against the oracle.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::instance::{Instance, InstanceBuilder};
use crate::query::{parse_constraints, parse_query, DenialConstraint, UnionQuery};
use crate::schema::Schema;
use crate::value::Value;

/// One generated problem, kept alongside its source texts so it can be
/// written out and replayed.
#[derive(Debug, Clone)]
pub struct RandomCase {
    pub schema_text: String,
    pub constraints_text: String,
    pub query_text: String,
    pub instance: Instance,
    pub dcs: Vec<DenialConstraint>,
    pub query: UnionQuery,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintMix {
    KeysOnly,
    DenialsOnly,
    Both,
    Any,
}

#[derive(Debug, Clone)]
pub struct CaseOptions {
    pub max_facts: usize,
    pub max_relations: usize,
    pub max_dcs: usize,
    pub max_dc_width: usize,
    pub max_atoms: usize,
    pub max_head: usize,
    pub max_disjuncts: usize,
    pub constraints: ConstraintMix,
    /// Force a boolean (`Some(true)`) or non-boolean (`Some(false)`) query.
    pub boolean: Option<bool>,
}

impl Default for CaseOptions {
    fn default() -> Self {
        CaseOptions {
            max_facts: 12,
            max_relations: 3,
            max_dcs: 2,
            max_dc_width: 3,
            max_atoms: 3,
            max_head: 2,
            max_disjuncts: 2,
            constraints: ConstraintMix::Any,
            boolean: None,
        }
    }
}

const VARS: [&str; 5] = ["x", "y", "z", "w", "u"];
const OPS: [&str; 6] = ["=", "!=", "<", ">", "<=", ">="];

struct Shape {
    arities: Vec<usize>,
    domain: i64,
}

fn atom_text<R: Rng>(rng: &mut R, shape: &Shape, rel: usize, vars: &[&str], out: &mut Vec<String>) -> String {
    let terms: Vec<String> = (0..shape.arities[rel])
        .map(|_| {
            if rng.gen_bool(0.15) {
                rng.gen_range(1..=shape.domain).to_string()
            } else {
                let v = *vars.choose(rng).expect("nonempty");
                if !out.iter().any(|o| o == v) {
                    out.push(v.to_string());
                }
                v.to_string()
            }
        })
        .collect();
    format!("R{}({})", rel + 1, terms.join(", "))
}

fn builtin_text<R: Rng>(rng: &mut R, shape: &Shape, used: &[String]) -> Option<String> {
    if used.is_empty() {
        return None;
    }
    let lhs = used.choose(rng).expect("nonempty").clone();
    let rhs = if used.len() > 1 && rng.gen_bool(0.6) {
        used.choose(rng).expect("nonempty").clone()
    } else {
        rng.gen_range(1..=shape.domain).to_string()
    };
    Some(format!("{lhs} {} {rhs}", OPS.choose(rng).expect("nonempty")))
}

fn body_text<R: Rng>(rng: &mut R, shape: &Shape, max_atoms: usize, vars: &[&str]) -> (String, Vec<String>) {
    let n = rng.gen_range(1..=max_atoms);
    let mut used = Vec::new();
    let mut parts: Vec<String> = (0..n)
        .map(|_| {
            let rel = rng.gen_range(0..shape.arities.len());
            atom_text(rng, shape, rel, vars, &mut used)
        })
        .collect();
    if rng.gen_bool(0.25) {
        if let Some(b) = builtin_text(rng, shape, &used) {
            parts.push(b);
        }
    }
    (parts.join(", "), used)
}

fn query_text<R: Rng>(rng: &mut R, shape: &Shape, o: &CaseOptions) -> String {
    let boolean = o.boolean.unwrap_or_else(|| rng.gen_bool(0.3));
    let disjuncts = rng.gen_range(1..=o.max_disjuncts.max(1));
    loop {
        let (first, used) = body_text(rng, shape, o.max_atoms, &VARS);
        let mut head: Vec<String> = Vec::new();
        if !boolean {
            let mut pool = used.clone();
            pool.shuffle(rng);
            let h = rng.gen_range(1..=o.max_head.max(1)).min(pool.len());
            if h == 0 {
                continue;
            }
            head = pool[..h].to_vec();
        }
        let head_text = head.join(", ");
        let mut rules = vec![format!("q({head_text}) :- {first}")];
        let mut ok = true;
        for _ in 1..disjuncts {
            let mut found = false;
            for _ in 0..20 {
                let (b, used) = body_text(rng, shape, o.max_atoms, &VARS);
                if head.iter().all(|h| used.contains(h)) {
                    rules.push(format!("q({head_text}) :- {b}"));
                    found = true;
                    break;
                }
            }
            ok &= found;
        }
        if ok {
            return rules.join(" ;\n");
        }
    }
}

/// Generate a case. Every value is an integer from a small domain so that
/// joins, key collisions and comparisons are frequent.
pub fn random_case<R: Rng>(rng: &mut R, o: &CaseOptions) -> RandomCase {
    let rels = rng.gen_range(1..=o.max_relations.max(1));
    let shape = Shape {
        arities: (0..rels).map(|_| rng.gen_range(2..=3)).collect(),
        domain: rng.gen_range(2..=3),
    };
    let mix = match o.constraints {
        ConstraintMix::Any => *[
            ConstraintMix::KeysOnly,
            ConstraintMix::DenialsOnly,
            ConstraintMix::Both,
        ]
        .choose(rng)
        .expect("nonempty"),
        m => m,
    };
    let keys = mix != ConstraintMix::DenialsOnly;
    let mut schema_text = String::new();
    for (i, &a) in shape.arities.iter().enumerate() {
        let key_len = if !keys {
            0
        } else if a == 3 && rng.gen_bool(0.25) {
            2
        } else {
            1
        };
        let attrs: Vec<String> = (0..a)
            .map(|p| {
                let star = if p < key_len { "*" } else { "" };
                format!("A{}{star} integer", p + 1)
            })
            .collect();
        let _ = writeln!(schema_text, "R{}({})", i + 1, attrs.join(", "));
    }
    let schema = Schema::parse(&schema_text).expect("generated schema parses");

    let mut constraints_text = String::new();
    if mix != ConstraintMix::KeysOnly {
        let lo = usize::from(mix == ConstraintMix::DenialsOnly);
        let k = rng.gen_range(lo..=o.max_dcs.max(lo));
        for _ in 0..k {
            let width = rng.gen_range(1..=o.max_dc_width.max(1));
            let mut used = Vec::new();
            let mut parts: Vec<String> = (0..width)
                .map(|_| {
                    let rel = rng.gen_range(0..rels);
                    atom_text(rng, &shape, rel, &VARS[..4], &mut used)
                })
                .collect();
            // Single-atom denials without a comparison would wipe out whole
            // relations, so give them one.
            let nb = if width == 1 { 1 } else { rng.gen_range(0..=1) };
            for _ in 0..nb {
                if let Some(b) = builtin_text(rng, &shape, &used) {
                    parts.push(b);
                }
            }
            let _ = writeln!(constraints_text, "!( {} )", parts.join(", "));
        }
    }
    let dcs = parse_constraints(&constraints_text, &schema).expect("generated constraints parse");

    let qt = query_text(rng, &shape, o);
    let query = parse_query(&qt, &schema).expect("generated query parses");

    let n = rng.gen_range(1..=o.max_facts.max(1));
    let mut b = InstanceBuilder::new(schema);
    for _ in 0..n {
        let rel = rng.gen_range(0..rels);
        let vals: Vec<Value> = (0..shape.arities[rel])
            .map(|_| Value::Integer(rng.gen_range(1..=shape.domain)))
            .collect();
        b.insert(&format!("R{}", rel + 1), vals).expect("typed values");
    }
    RandomCase {
        schema_text,
        constraints_text,
        query_text: qt,
        instance: b.finish(),
        dcs,
        query,
    }
}

/// Boolean query `q() :- R(x, z), S(y, z)` with keys on the first
/// attributes: both relations point into a shared sink value.
pub fn sink_case<R: Rng>(rng: &mut R, max_facts: usize) -> RandomCase {
    let schema_text = "R(A1* integer, A2 integer)\nS(A1* integer, A2 integer)\n".to_string();
    let schema = Schema::parse(&schema_text).expect("static schema");
    let query_text = "q() :- R(x, z), S(y, z)".to_string();
    let query = parse_query(&query_text, &schema).expect("static query");
    let n = rng.gen_range(2..=max_facts.max(2));
    let mut b = InstanceBuilder::new(schema);
    for _ in 0..n {
        let rel = if rng.gen_bool(0.5) { "R" } else { "S" };
        let vals = vec![
            Value::Integer(rng.gen_range(1..=3)),
            Value::Integer(rng.gen_range(1..=3)),
        ];
        b.insert(rel, vals).expect("typed values");
    }
    RandomCase {
        schema_text,
        constraints_text: String::new(),
        query_text,
        instance: b.finish(),
        dcs: Vec::new(),
        query,
    }
}

impl RandomCase {
    /// Write `schema.txt`, `constraints.txt`, `query.txt` and one CSV per
    /// relation under `data/`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("schema.txt"), &self.schema_text)?;
        fs::write(dir.join("constraints.txt"), &self.constraints_text)?;
        fs::write(dir.join("query.txt"), &self.query_text)?;
        self.instance
            .write_csv_dir(&dir.join("data"))
            .map_err(|e| io::Error::other(e.to_string()))
    }

    /// Human-readable dump of the whole case.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# schema\n{}", self.schema_text.trim_end());
        let _ = writeln!(s, "# constraints\n{}", self.constraints_text.trim_end());
        let _ = writeln!(s, "# query\n{}", self.query_text);
        let _ = writeln!(s, "# facts");
        for f in self.instance.fact_ids() {
            let _ = writeln!(s, "{}", self.instance.display_fact(f));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_cases_respect_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let o = CaseOptions::default();
        for _ in 0..200 {
            let c = random_case(&mut rng, &o);
            assert!(c.instance.len() <= 12);
            assert!(c.dcs.len() <= 2);
            assert!(c.dcs.iter().all(|d| d.width() <= 3));
            assert!(c.query.max_atoms() <= 3);
            assert!(c.query.arity() <= 2);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let a = random_case(&mut ChaCha8Rng::seed_from_u64(3), &CaseOptions::default());
        let b = random_case(&mut ChaCha8Rng::seed_from_u64(3), &CaseOptions::default());
        assert_eq!(a.describe(), b.describe());
    }
}
