//! Homomorphism enumeration for conjunctive queries.
//!
//! Atoms are joined left-deep in a greedy order: start from the most
//! selective atom, then always continue with the atom sharing the most
//! already-bound variables. Each step probes a hash index over the
//! positions whose values are known at that point.

use std::collections::{HashMap, HashSet};

use rustc_hash::FxHashMap;

use crate::instance::{FactId, Instance};
use crate::schema::RelId;
use crate::value::{Tuple, Value};

use super::ast::{Builtin, CmpOp, ConjunctiveQuery, Term, UnionQuery};

/// One match of a query body: the head values and the set of facts the
/// body atoms were mapped to (sorted, duplicates collapsed).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Witness {
    pub answer: Tuple,
    pub facts: Vec<FactId>,
}

#[derive(Debug, Clone)]
enum Slot<'a> {
    Const(&'a Value),
    /// First occurrence of a variable; binds it.
    Bind(usize),
    /// Variable bound earlier (in a previous step or this atom).
    Check(usize),
}

#[derive(Debug, Clone)]
enum Operand<'a> {
    Var(usize),
    Const(&'a Value),
}

#[derive(Debug, Clone)]
struct Check<'a> {
    op: CmpOp,
    lhs: Operand<'a>,
    rhs: Operand<'a>,
}

struct Step<'a> {
    atom: usize,
    slots: Vec<Slot<'a>>,
    probe: Vec<usize>,
    checks: Vec<Check<'a>>,
    index: FxHashMap<Vec<&'a Value>, Vec<FactId>>,
}

struct Plan<'a> {
    nvars: usize,
    head: Vec<usize>,
    steps: Vec<Step<'a>>,
    natoms: usize,
    satisfiable: bool,
}

fn operand<'a>(t: &'a Term, vars: &HashMap<&str, usize>) -> Operand<'a> {
    match t {
        Term::Var(v) => Operand::Var(vars[v.as_str()]),
        Term::Const(c) => Operand::Const(c),
    }
}

fn plan<'a>(
    q: &'a ConjunctiveQuery,
    instance: &'a Instance,
    filter: Option<&dyn Fn(FactId) -> bool>,
) -> Plan<'a> {
    let mut vars: HashMap<&str, usize> = HashMap::new();
    for a in &q.atoms {
        for t in &a.terms {
            if let Term::Var(v) = t {
                let n = vars.len();
                vars.entry(v.as_str()).or_insert(n);
            }
        }
    }
    let head: Vec<usize> = q.head.iter().map(|h| vars[h.as_str()]).collect();

    let rel_size = |r: RelId| instance.relation_facts(r).len();
    let mut bound = vec![false; vars.len()];
    let mut remaining: Vec<usize> = (0..q.atoms.len()).collect();
    let mut order = Vec::new();
    while !remaining.is_empty() {
        let score = |ai: usize, bound: &[bool]| {
            let a = &q.atoms[ai];
            let known = a
                .terms
                .iter()
                .filter(|t| match t {
                    Term::Const(_) => true,
                    Term::Var(v) => bound[vars[v.as_str()]],
                })
                .count();
            (known, usize::MAX - rel_size(a.relation))
        };
        let (pick_at, _) = remaining
            .iter()
            .enumerate()
            .max_by_key(|(i, &ai)| (score(ai, &bound), usize::MAX - *i))
            .expect("nonempty");
        let ai = remaining.remove(pick_at);
        for t in &q.atoms[ai].terms {
            if let Term::Var(v) = t {
                bound[vars[v.as_str()]] = true;
            }
        }
        order.push(ai);
    }

    let mut pending: Vec<&Builtin> = Vec::new();
    let mut satisfiable = true;
    for b in &q.builtins {
        match (&b.lhs, &b.rhs) {
            (Term::Const(l), Term::Const(r)) => satisfiable &= b.op.holds(l, r),
            _ => pending.push(b),
        }
    }

    let mut bound = vec![false; vars.len()];
    let mut steps = Vec::new();
    for &ai in &order {
        let a = &q.atoms[ai];
        let mut slots = Vec::with_capacity(a.terms.len());
        let mut probe = Vec::new();
        let mut bound_here: HashSet<usize> = HashSet::new();
        for (pos, t) in a.terms.iter().enumerate() {
            match t {
                Term::Const(c) => {
                    probe.push(pos);
                    slots.push(Slot::Const(c));
                }
                Term::Var(v) => {
                    let vi = vars[v.as_str()];
                    if bound[vi] {
                        probe.push(pos);
                        slots.push(Slot::Check(vi));
                    } else if bound_here.contains(&vi) {
                        slots.push(Slot::Check(vi));
                    } else {
                        bound_here.insert(vi);
                        slots.push(Slot::Bind(vi));
                    }
                }
            }
        }
        for vi in bound_here {
            bound[vi] = true;
        }
        let is_bound = |t: &Term| match t {
            Term::Const(_) => true,
            Term::Var(v) => bound[vars[v.as_str()]],
        };
        let mut checks = Vec::new();
        pending.retain(|b| {
            if is_bound(&b.lhs) && is_bound(&b.rhs) {
                checks.push(Check {
                    op: b.op,
                    lhs: operand(&b.lhs, &vars),
                    rhs: operand(&b.rhs, &vars),
                });
                false
            } else {
                true
            }
        });
        steps.push(Step {
            atom: ai,
            slots,
            probe,
            checks,
            index: FxHashMap::default(),
        });
    }
    debug_assert!(
        pending.is_empty(),
        "validated queries bind every builtin variable"
    );

    // Build one index per step. Positions known before the step form the key;
    // bound-variable positions are filled at probe time.
    for step in &mut steps {
        let rel = q.atoms[step.atom].relation;
        let mut index: FxHashMap<Vec<&'a Value>, Vec<FactId>> = FxHashMap::default();
        'facts: for &id in instance.relation_facts(rel) {
            if let Some(f) = filter {
                if !f(id) {
                    continue;
                }
            }
            let fact = instance.fact(id);
            let mut key = Vec::with_capacity(step.probe.len());
            for &p in &step.probe {
                if let Slot::Const(c) = step.slots[p] {
                    if &fact.values[p] != c {
                        continue 'facts;
                    }
                }
                key.push(&fact.values[p]);
            }
            index.entry(key).or_default().push(id);
        }
        step.index = index;
    }

    Plan {
        nvars: vars.len(),
        head,
        steps,
        natoms: q.atoms.len(),
        satisfiable,
    }
}

fn value_of<'a>(o: &Operand<'a>, b: &[Option<&'a Value>]) -> &'a Value {
    match *o {
        Operand::Const(c) => c,
        Operand::Var(i) => b[i].expect("bound"),
    }
}

struct Runner<'p, 'a, F> {
    plan: &'p Plan<'a>,
    instance: &'a Instance,
    bindings: Vec<Option<&'a Value>>,
    facts: Vec<FactId>,
    answer: Vec<Value>,
    key: Vec<&'a Value>,
    emit: F,
}

impl<'a, F: FnMut(&[Value], &[FactId])> Runner<'_, 'a, F> {
    fn run(&mut self, depth: usize) {
        if depth == self.plan.steps.len() {
            self.answer.clear();
            for &h in &self.plan.head {
                self.answer.push(self.bindings[h].expect("head bound").clone());
            }
            (self.emit)(&self.answer, &self.facts);
            return;
        }
        let plan = self.plan;
        let step = &plan.steps[depth];
        self.key.clear();
        for &p in &step.probe {
            self.key.push(match step.slots[p] {
                Slot::Const(c) => c,
                Slot::Check(v) => self.bindings[v].expect("bound"),
                Slot::Bind(_) => unreachable!("probe positions are known"),
            });
        }
        let Some(candidates) = step.index.get(&self.key) else {
            return;
        };
        for &id in candidates {
            let fact = self.instance.fact(id);
            let mut newly = Vec::new();
            let mut ok = true;
            for (p, slot) in step.slots.iter().enumerate() {
                match *slot {
                    Slot::Const(_) => {}
                    Slot::Bind(v) => {
                        self.bindings[v] = Some(&fact.values[p]);
                        newly.push(v);
                    }
                    Slot::Check(v) => {
                        if self.bindings[v] != Some(&fact.values[p]) {
                            ok = false;
                            break;
                        }
                    }
                }
            }
            if ok {
                ok = step.checks.iter().all(|c| {
                    c.op.holds(value_of(&c.lhs, &self.bindings), value_of(&c.rhs, &self.bindings))
                });
            }
            if ok {
                self.facts[step.atom] = id;
                self.run(depth + 1);
            }
            for v in newly {
                self.bindings[v] = None;
            }
        }
    }
}

/// Call `emit(answer, facts)` for every homomorphism of the body of `q`
/// into the instance that satisfies all builtins. `facts[i]` is the image of
/// atom `i`. When `filter` is given, only facts it accepts are used.
pub fn for_each_match<F>(
    q: &ConjunctiveQuery,
    instance: &Instance,
    filter: Option<&dyn Fn(FactId) -> bool>,
    emit: F,
) where
    F: FnMut(&[Value], &[FactId]),
{
    let plan = plan(q, instance, filter);
    if !plan.satisfiable || plan.natoms == 0 {
        return;
    }
    let mut runner = Runner {
        plan: &plan,
        instance,
        bindings: vec![None; plan.nvars],
        facts: vec![FactId(0); plan.natoms],
        answer: Vec::new(),
        key: Vec::new(),
        emit,
    };
    runner.run(0);
}

/// All witnesses of `q`, deduplicated by (answer, fact set) and sorted by
/// fact set, then answer.
pub fn evaluate(q: &ConjunctiveQuery, instance: &Instance) -> Vec<Witness> {
    let mut seen: HashSet<Witness> = HashSet::new();
    for_each_match(q, instance, None, |answer, facts| {
        let mut set = facts.to_vec();
        set.sort_unstable();
        set.dedup();
        seen.insert(Witness {
            answer: answer.to_vec(),
            facts: set,
        });
    });
    let mut out: Vec<Witness> = seen.into_iter().collect();
    out.sort_by(|a, b| a.facts.cmp(&b.facts).then_with(|| a.answer.cmp(&b.answer)));
    out
}

/// Witnesses of every disjunct, tagged with the disjunct index.
pub fn evaluate_union(q: &UnionQuery, instance: &Instance) -> Vec<(usize, Witness)> {
    q.disjuncts
        .iter()
        .enumerate()
        .flat_map(|(i, cq)| evaluate(cq, instance).into_iter().map(move |w| (i, w)))
        .collect()
}
