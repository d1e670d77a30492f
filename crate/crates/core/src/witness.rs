//! Minimal witnesses of a query, minimal violations of a constraint set,
//! near-violations, and the consistent part of an instance.

use std::collections::HashMap;

use serde::Serialize;

use crate::instance::{FactId, Instance};
use crate::query::{for_each_match, DenialConstraint, UnionQuery};
use crate::value::{format_tuple, Tuple};

/// Reduce a family of fact sets to its subset-minimal members.
///
/// Each input set must be sorted. Output is deduplicated and sorted by
/// (size, contents).
pub fn minimize_sets(mut sets: Vec<Vec<FactId>>) -> Vec<Vec<FactId>> {
    sets.sort_unstable_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sets.dedup();
    if sets.len() < 2 || sets[0].len() == sets[sets.len() - 1].len() {
        return sets;
    }
    // Inverted index over kept sets: fact -> indices of kept sets holding it.
    let mut by_fact: HashMap<FactId, Vec<u32>> = HashMap::new();
    let mut kept: Vec<Vec<FactId>> = Vec::with_capacity(sets.len());
    let mut hits: HashMap<u32, u32> = HashMap::new();
    for s in sets {
        hits.clear();
        let mut dominated = false;
        'scan: for f in &s {
            if let Some(list) = by_fact.get(f) {
                for &k in list {
                    let c = hits.entry(k).or_insert(0);
                    *c += 1;
                    if *c as usize == kept[k as usize].len() {
                        dominated = true;
                        break 'scan;
                    }
                }
            }
        }
        if dominated {
            continue;
        }
        let k = kept.len() as u32;
        for &f in &s {
            by_fact.entry(f).or_default().push(k);
        }
        kept.push(s);
    }
    kept
}

/// Potential answers of a query together with the minimal witnesses of each.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct WitnessIndex {
    /// Potential answers in order of first appearance (disjunct order, then
    /// witnesses ordered by fact set).
    pub answers: Vec<Tuple>,
    /// `witnesses[l]` holds the minimal witnesses of `answers[l]`.
    pub witnesses: Vec<Vec<Vec<FactId>>>,
}

impl WitnessIndex {
    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn position(&self, answer: &[crate::value::Value]) -> Option<usize> {
        self.answers.iter().position(|a| a.as_slice() == answer)
    }

    /// Number of atoms in the largest minimal witness.
    pub fn max_width(&self) -> usize {
        self.witnesses
            .iter()
            .flatten()
            .map(|w| w.len())
            .max()
            .unwrap_or(0)
    }
}

/// Answers and minimal witnesses of `q` on `instance`. A boolean query that
/// is false yields an empty index; a true one yields the single answer `()`.
pub fn minimal_witnesses(q: &UnionQuery, instance: &Instance) -> WitnessIndex {
    minimal_witnesses_filtered(q, instance, None)
}

pub(crate) fn minimal_witnesses_filtered(
    q: &UnionQuery,
    instance: &Instance,
    filter: Option<&dyn Fn(FactId) -> bool>,
) -> WitnessIndex {
    let mut slot: HashMap<Tuple, usize> = HashMap::new();
    let mut answers: Vec<Tuple> = Vec::new();
    let mut raw: Vec<Vec<Vec<FactId>>> = Vec::new();
    for cq in &q.disjuncts {
        let mut found: Vec<(Vec<FactId>, Tuple)> = Vec::new();
        for_each_match(cq, instance, filter, |answer, facts| {
            let mut set = facts.to_vec();
            set.sort_unstable();
            set.dedup();
            found.push((set, answer.to_vec()));
        });
        found.sort_unstable();
        found.dedup();
        for (set, answer) in found {
            let l = match slot.get(&answer) {
                Some(&l) => l,
                None => {
                    slot.insert(answer.clone(), answers.len());
                    answers.push(answer);
                    raw.push(Vec::new());
                    answers.len() - 1
                }
            };
            raw[l].push(set);
        }
    }
    let witnesses = raw
        .into_iter()
        .map(|sets| {
            let mut m = minimize_sets(sets);
            m.sort_unstable();
            m
        })
        .collect();
    WitnessIndex { answers, witnesses }
}

/// Minimal violations of a constraint set and the near-violations they
/// induce. Near-violations use `[FactId::TRUE]` for a fact that is a
/// violation on its own.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ViolationIndex {
    /// Minimal violations, sorted by contents.
    pub violations: Vec<Vec<FactId>>,
    /// `near[i]` lists the near-violations of fact `i` (index 0 unused).
    pub near: Vec<Vec<Vec<FactId>>>,
}

impl ViolationIndex {
    pub fn near_of(&self, f: FactId) -> &[Vec<FactId>] {
        self.near.get(f.0 as usize).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Whether fact `f` occurs in some minimal violation.
    pub fn is_conflicting(&self, f: FactId) -> bool {
        !self.near_of(f).is_empty()
    }

    /// Facts occurring in no minimal violation, in id order.
    pub fn consistent_part(&self, instance: &Instance) -> Vec<FactId> {
        instance.fact_ids().filter(|&f| !self.is_conflicting(f)).collect()
    }

    /// Largest violation size.
    pub fn max_width(&self) -> usize {
        self.violations.iter().map(|v| v.len()).max().unwrap_or(0)
    }
}

/// Subset-minimal fact sets violating some constraint of `sigma`.
pub fn minimal_violations(sigma: &[DenialConstraint], instance: &Instance) -> Vec<Vec<FactId>> {
    let mut sets: Vec<Vec<FactId>> = Vec::new();
    for d in sigma {
        for_each_match(&d.body, instance, None, |_, facts| {
            let mut set = facts.to_vec();
            set.sort_unstable();
            set.dedup();
            sets.push(set);
        });
    }
    let mut v = minimize_sets(sets);
    v.sort_unstable();
    v
}

/// Near-violations of every fact, derived from the minimal violations.
pub fn near_violations(violations: Vec<Vec<FactId>>, instance: &Instance) -> ViolationIndex {
    let mut near: Vec<Vec<Vec<FactId>>> = vec![Vec::new(); instance.len() + 1];
    for v in &violations {
        if v.len() == 1 {
            near[v[0].0 as usize].push(vec![FactId::TRUE]);
            continue;
        }
        for (k, &f) in v.iter().enumerate() {
            let rest: Vec<FactId> = v
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &g)| g)
                .collect();
            near[f.0 as usize].push(rest);
        }
    }
    ViolationIndex { violations, near }
}

/// Minimal violations plus near-violations in one step.
pub fn violation_index(sigma: &[DenialConstraint], instance: &Instance) -> ViolationIndex {
    near_violations(minimal_violations(sigma, instance), instance)
}

/// Facts belonging to every repair: those in no minimal violation.
pub fn consistent_part(instance: &Instance, sigma: &[DenialConstraint]) -> Vec<FactId> {
    violation_index(sigma, instance).consistent_part(instance)
}

/// Consistent part under the schema's keys alone: facts in singleton
/// key-equal groups.
pub fn key_consistent_part(instance: &Instance) -> Vec<FactId> {
    let mut out: Vec<FactId> = instance
        .all_key_groups()
        .into_iter()
        .filter(|g| g.len() == 1)
        .map(|g| g[0])
        .collect();
    out.sort_unstable();
    out
}

#[derive(Serialize)]
struct Dump<'a> {
    answers: Vec<DumpAnswer<'a>>,
    violations: &'a [Vec<FactId>],
    near_violations: Vec<DumpNear<'a>>,
}

#[derive(Serialize)]
struct DumpAnswer<'a> {
    index: usize,
    answer: String,
    witnesses: &'a [Vec<FactId>],
}

#[derive(Serialize)]
struct DumpNear<'a> {
    fact: FactId,
    near: &'a [Vec<FactId>],
}

/// JSON dump of answers, witnesses, violations and near-violations.
pub fn dump_json(w: &WitnessIndex, v: &ViolationIndex) -> String {
    let d = Dump {
        answers: w
            .answers
            .iter()
            .zip(&w.witnesses)
            .enumerate()
            .map(|(i, (a, ws))| DumpAnswer {
                index: i + 1,
                answer: format_tuple(a),
                witnesses: ws,
            })
            .collect(),
        violations: &v.violations,
        near_violations: v
            .near
            .iter()
            .enumerate()
            .filter(|(_, n)| !n.is_empty())
            .map(|(i, n)| DumpNear {
                fact: FactId(i as u32),
                near: n,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&d).expect("serializable")
}
