//! Brute-force repairs and consistent answers for small instances.
//!
//! Nothing here uses the indexed evaluator, the witness module or the
//! encoder: queries are evaluated by plain nested loops, conflicts are found
//! by matching constraint bodies and comparing key projections fact by fact,
//! and repairs are enumerated exhaustively.

pub mod check;
pub mod random;

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::instance::{FactId, Instance};
use crate::query::{ConjunctiveQuery, DenialConstraint, Term, UnionQuery};
use crate::value::{Tuple, Value};

pub const DEFAULT_CAP: u128 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("repair count bound {bound} exceeds the cap of {cap}")]
    CapExceeded { bound: u128, cap: u128 },
}

fn matches_into(
    q: &ConjunctiveQuery,
    instance: &Instance,
    allowed: &dyn Fn(FactId) -> bool,
    out: &mut dyn FnMut(&HashMap<&str, Value>, &[FactId]),
) {
    fn go<'q>(
        q: &'q ConjunctiveQuery,
        instance: &Instance,
        allowed: &dyn Fn(FactId) -> bool,
        i: usize,
        env: &mut HashMap<&'q str, Value>,
        used: &mut Vec<FactId>,
        out: &mut dyn FnMut(&HashMap<&str, Value>, &[FactId]),
    ) {
        if i == q.atoms.len() {
            let val = |t: &Term, env: &HashMap<&str, Value>| match t {
                Term::Const(c) => c.clone(),
                Term::Var(v) => env[v.as_str()].clone(),
            };
            if q.builtins
                .iter()
                .all(|b| b.op.holds(&val(&b.lhs, env), &val(&b.rhs, env)))
            {
                out(env, used);
            }
            return;
        }
        let atom = &q.atoms[i];
        for f in instance.facts() {
            if f.relation != atom.relation || !allowed(f.id) {
                continue;
            }
            let mut added: Vec<&str> = Vec::new();
            let mut ok = true;
            for (t, v) in atom.terms.iter().zip(f.values.iter()) {
                match t {
                    Term::Const(c) => {
                        if c != v {
                            ok = false;
                            break;
                        }
                    }
                    Term::Var(name) => match env.get(name.as_str()) {
                        Some(b) => {
                            if b != v {
                                ok = false;
                                break;
                            }
                        }
                        None => {
                            env.insert(name.as_str(), v.clone());
                            added.push(name.as_str());
                        }
                    },
                }
            }
            if ok {
                used.push(f.id);
                go(q, instance, allowed, i + 1, env, used, out);
                used.pop();
            }
            for name in added {
                env.remove(name);
            }
        }
    }
    let mut env = HashMap::new();
    let mut used = Vec::new();
    go(q, instance, allowed, 0, &mut env, &mut used, out);
}

/// Answers of `q` over the facts accepted by `allowed`.
pub fn naive_answers(
    q: &UnionQuery,
    instance: &Instance,
    allowed: &dyn Fn(FactId) -> bool,
) -> BTreeSet<Tuple> {
    let mut out = BTreeSet::new();
    for cq in &q.disjuncts {
        matches_into(cq, instance, allowed, &mut |env, _| {
            out.insert(cq.head.iter().map(|h| env[h.as_str()].clone()).collect());
        });
    }
    out
}

/// All (answer, fact set) pairs of `q` by nested loops.
pub fn naive_witnesses(q: &ConjunctiveQuery, instance: &Instance) -> BTreeSet<(Tuple, Vec<FactId>)> {
    let mut out = BTreeSet::new();
    matches_into(q, instance, &|_| true, &mut |env, used| {
        let mut s = used.to_vec();
        s.sort_unstable();
        s.dedup();
        out.insert((q.head.iter().map(|h| env[h.as_str()].clone()).collect(), s));
    });
    out
}

/// Constraint set used by the oracle: the keys declared in the schema plus
/// explicit denial constraints.
#[derive(Debug, Clone)]
pub struct Conflicts {
    /// Fact sets that may not all be present; not necessarily minimal.
    pub sets: Vec<Vec<FactId>>,
    /// No explicit denial constraints: repairs pick one fact per key group.
    pub keys_only: bool,
}

pub fn conflicts(instance: &Instance, dcs: &[DenialConstraint]) -> Conflicts {
    let mut sets: BTreeSet<Vec<FactId>> = BTreeSet::new();
    let facts = instance.facts();
    for (i, f) in facts.iter().enumerate() {
        let rs = instance.schema().relation(f.relation);
        if !rs.has_key() {
            continue;
        }
        for g in &facts[i + 1..] {
            if g.relation == f.relation
                && rs.key.iter().all(|&p| f.values[p] == g.values[p])
                && f.values != g.values
            {
                sets.insert(vec![f.id, g.id]);
            }
        }
    }
    for d in dcs {
        matches_into(&d.body, instance, &|_| true, &mut |_, used| {
            let mut s = used.to_vec();
            s.sort_unstable();
            s.dedup();
            sets.insert(s);
        });
    }
    Conflicts {
        sets: sets.into_iter().collect(),
        keys_only: dcs.is_empty(),
    }
}

fn consistent_with(members: &[bool], c: &Conflicts) -> bool {
    !c.sets.iter().any(|s| s.iter().all(|f| members[f.0 as usize]))
}

fn membership(instance: &Instance, set: &[FactId]) -> Vec<bool> {
    let mut m = vec![false; instance.len() + 1];
    for f in set {
        m[f.0 as usize] = true;
    }
    m
}

/// Whether `set` is consistent and no fact outside it can be added.
pub fn is_repair(instance: &Instance, dcs: &[DenialConstraint], set: &[FactId]) -> bool {
    is_repair_with(instance, &conflicts(instance, dcs), set)
}

fn is_repair_with(instance: &Instance, c: &Conflicts, set: &[FactId]) -> bool {
    let mut m = membership(instance, set);
    if !consistent_with(&m, c) {
        return false;
    }
    for f in instance.fact_ids() {
        if m[f.0 as usize] {
            continue;
        }
        m[f.0 as usize] = true;
        let ok = consistent_with(&m, c);
        m[f.0 as usize] = false;
        if ok {
            return false;
        }
    }
    true
}

/// All subset repairs, each sorted by fact id; the list is sorted.
pub fn enumerate_repairs(
    instance: &Instance,
    dcs: &[DenialConstraint],
    cap: u128,
) -> Result<Vec<Vec<FactId>>, OracleError> {
    let c = conflicts(instance, dcs);
    let mut involved = vec![false; instance.len() + 1];
    for s in &c.sets {
        for f in s {
            involved[f.0 as usize] = true;
        }
    }
    let free: Vec<FactId> = instance.fact_ids().filter(|f| !involved[f.0 as usize]).collect();
    let hot: Vec<FactId> = instance.fact_ids().filter(|f| involved[f.0 as usize]).collect();

    let mut out: Vec<Vec<FactId>> = Vec::new();
    if c.keys_only {
        // One fact from each key-equal group.
        let mut groups: Vec<Vec<FactId>> = Vec::new();
        let mut seen: HashMap<(u32, Vec<Value>), usize> = HashMap::new();
        for &f in &hot {
            let fact = instance.fact(f);
            let rs = instance.schema().relation(fact.relation);
            let key: Vec<Value> = rs.key.iter().map(|&p| fact.values[p].clone()).collect();
            match seen.get(&(fact.relation.0, key.clone())) {
                Some(&g) => groups[g].push(f),
                None => {
                    seen.insert((fact.relation.0, key), groups.len());
                    groups.push(vec![f]);
                }
            }
        }
        let bound = groups
            .iter()
            .try_fold(1u128, |acc, g| acc.checked_mul(g.len() as u128))
            .unwrap_or(u128::MAX);
        if bound > cap {
            return Err(OracleError::CapExceeded { bound, cap });
        }
        let mut pick = vec![0usize; groups.len()];
        loop {
            let mut r = free.clone();
            r.extend(groups.iter().zip(&pick).map(|(g, &i)| g[i]));
            r.sort_unstable();
            out.push(r);
            let mut k = 0;
            while k < groups.len() {
                pick[k] += 1;
                if pick[k] < groups[k].len() {
                    break;
                }
                pick[k] = 0;
                k += 1;
            }
            if k == groups.len() {
                break;
            }
        }
    } else {
        let bound = 1u128.checked_shl(hot.len() as u32).unwrap_or(u128::MAX);
        if bound > cap {
            return Err(OracleError::CapExceeded { bound, cap });
        }
        let mut m = membership(instance, &free);
        fn dfs(
            k: usize,
            hot: &[FactId],
            m: &mut Vec<bool>,
            c: &Conflicts,
            instance: &Instance,
            out: &mut Vec<Vec<FactId>>,
        ) {
            if k == hot.len() {
                // Maximality: every excluded fact must close a conflict.
                for &f in hot {
                    if !m[f.0 as usize] {
                        m[f.0 as usize] = true;
                        let ok = consistent_with(m, c);
                        m[f.0 as usize] = false;
                        if ok {
                            return;
                        }
                    }
                }
                out.push(instance.fact_ids().filter(|f| m[f.0 as usize]).collect());
                return;
            }
            let f = hot[k];
            m[f.0 as usize] = true;
            if consistent_with(m, c) {
                dfs(k + 1, hot, m, c, instance, out);
            }
            m[f.0 as usize] = false;
            dfs(k + 1, hot, m, c, instance, out);
        }
        dfs(0, &hot, &mut m, &c, instance, &mut out);
    }
    out.sort();
    Ok(out)
}

/// Answers present in every repair.
pub fn consistent_answers_bruteforce(
    q: &UnionQuery,
    instance: &Instance,
    dcs: &[DenialConstraint],
    cap: u128,
) -> Result<BTreeSet<Tuple>, OracleError> {
    let repairs = enumerate_repairs(instance, dcs, cap)?;
    let mut acc: Option<BTreeSet<Tuple>> = None;
    for r in &repairs {
        let m = membership(instance, r);
        let ans = naive_answers(q, instance, &|f| m[f.0 as usize]);
        acc = Some(match acc {
            None => ans,
            Some(a) => a.intersection(&ans).cloned().collect(),
        });
    }
    Ok(acc.unwrap_or_default())
}

/// Whether a boolean query holds in every repair.
pub fn certain_bruteforce(
    q: &UnionQuery,
    instance: &Instance,
    dcs: &[DenialConstraint],
    cap: u128,
) -> Result<bool, OracleError> {
    debug_assert!(q.is_boolean());
    Ok(!consistent_answers_bruteforce(q, instance, dcs, cap)?.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceBuilder;
    use crate::query::{parse_constraints, parse_query};
    use crate::schema::Schema;

    fn inst(schema: &str, rows: &[(&str, &[i64])]) -> Instance {
        let s = Schema::parse(schema).unwrap();
        let mut b = InstanceBuilder::new(s);
        for (r, vals) in rows {
            b.insert(r, vals.iter().map(|&v| Value::Integer(v)).collect())
                .unwrap();
        }
        b.finish()
    }

    #[test]
    fn consistent_instance_single_repair() {
        let i = inst("R(a* int, b int)", &[("R", &[1, 2]), ("R", &[2, 2])]);
        let r = enumerate_repairs(&i, &[], DEFAULT_CAP).unwrap();
        assert_eq!(r, vec![vec![FactId(1), FactId(2)]]);
        assert!(is_repair(&i, &[], &r[0]));
    }

    #[test]
    fn key_groups_product() {
        let i = inst(
            "R(a* int, b int)",
            &[
                ("R", &[1, 1]),
                ("R", &[1, 2]),
                ("R", &[2, 1]),
                ("R", &[2, 2]),
                ("R", &[2, 3]),
            ],
        );
        assert_eq!(enumerate_repairs(&i, &[], DEFAULT_CAP).unwrap().len(), 6);
        assert!(matches!(
            enumerate_repairs(&i, &[], 5),
            Err(OracleError::CapExceeded { bound: 6, .. })
        ));
    }

    #[test]
    fn triangle_survives_every_repair() {
        // The key on the source keeps exactly one of 1->2 and 1->4; each
        // choice closes a triangle (1-2-3 or 1-4-3).
        let i = inst(
            "E(s* int, t int)",
            &[
                ("E", &[1, 2]),
                ("E", &[2, 3]),
                ("E", &[3, 1]),
                ("E", &[1, 4]),
                ("E", &[4, 3]),
            ],
        );
        let q = parse_query("q() :- E(x,y), E(y,z), E(z,x)", i.schema()).unwrap();
        assert!(certain_bruteforce(&q, &i, &[], DEFAULT_CAP).unwrap());
    }

    #[test]
    fn dc_repairs_are_maximal_independent_sets() {
        let i = inst(
            "R(a int, b int)",
            &[("R", &[1, 1]), ("R", &[1, 2]), ("R", &[2, 2])],
        );
        let dcs = parse_constraints("!( R(x,y), R(x,z), y < z )\n!( R(x,x) )", i.schema()).unwrap();
        let r = enumerate_repairs(&i, &dcs, DEFAULT_CAP).unwrap();
        // f1, f3 are singleton violations; f2 stays.
        assert_eq!(r, vec![vec![FactId(2)]]);
        assert!(!is_repair(&i, &dcs, &[]));
    }
}
