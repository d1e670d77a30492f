//! Consistent answers by iterated MaxSAT (or SAT) over the CNF encodings.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{encode_denial, encode_keys, EncodeStats, Encoding, VarKind};
use crate::formula::{clause_satisfied, Lit, Var, Wcnf};
use crate::instance::{FactId, Instance};
use crate::query::{schema_key_denials, DenialConstraint, UnionQuery};
use crate::solver::{
    external_solve, maxsat_solve, solve_under_assumptions, ExternalSolver, Model, SatOutcome, SatResult,
    SolveError, Solver, SolverConfig,
};
use crate::value::{format_tuple, Tuple, Value};
use crate::witness::{minimal_witnesses, violation_index, ViolationIndex, WitnessIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Repeated MaxSAT, eliminating every answer whose `p` the optimum sets.
    MaxSat,
    /// Repeated SAT with a clause requiring some remaining `p`.
    IterSat,
}

/// How key constraints are encoded when they are the only constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeyPath {
    /// Key-equal groups (at least one fact kept per group).
    Native,
    /// Expansion into denial constraints.
    Denial,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverChoice {
    Internal,
    External(ExternalSolver),
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub strategy: Strategy,
    pub optimize: bool,
    pub key_path: KeyPath,
    pub solver: SolverChoice,
    pub solver_config: SolverConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            strategy: Strategy::MaxSat,
            optimize: true,
            key_path: KeyPath::Native,
            solver: SolverChoice::Internal,
            solver_config: SolverConfig::default(),
        }
    }
}

/// Inputs of one run. Keys come from the instance schema; `dcs` are the
/// additional denial constraints.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub instance: &'a Instance,
    pub dcs: &'a [DenialConstraint],
    pub query: &'a UnionQuery,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecidedBy {
    ConsistentPart,
    Solver,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerVerdict {
    pub answer: Tuple,
    pub verdict: Verdict,
    pub decided_by: DecidedBy,
    /// Iteration (1-based) whose model eliminated the answer.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eliminated_in: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerReport {
    pub path: &'static str,
    pub strategy: Strategy,
    pub optimize: bool,
    pub answers: Vec<AnswerVerdict>,
    pub iterations: usize,
    pub complete: bool,
    pub variables: u32,
    pub clauses: usize,
    pub soft_clauses: usize,
    pub stats: EncodeStats,
    pub encode_seconds: f64,
    pub solve_seconds: f64,
    #[serde(skip)]
    pub witnesses: Vec<Vec<Vec<FactId>>>,
    #[serde(skip)]
    models: Vec<Vec<bool>>,
    #[serde(skip)]
    fact_vars: Vec<(FactId, Var)>,
}

impl AnswerReport {
    pub fn consistent(&self) -> Vec<&Tuple> {
        self.answers
            .iter()
            .filter(|a| a.verdict == Verdict::Consistent)
            .map(|a| &a.answer)
            .collect()
    }

    pub fn inconsistent(&self) -> Vec<&Tuple> {
        self.answers
            .iter()
            .filter(|a| a.verdict == Verdict::Inconsistent)
            .map(|a| &a.answer)
            .collect()
    }

    pub fn verdict_of(&self, answer: &[Value]) -> Option<Verdict> {
        self.answers
            .iter()
            .find(|a| a.answer.as_slice() == answer)
            .map(|a| a.verdict)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let width = self
            .answers
            .iter()
            .map(|a| format_tuple(&a.answer).len())
            .max()
            .unwrap_or(6)
            .max(6);
        let _ = writeln!(s, "{:<width$}  {:<12}  decided-by", "answer", "verdict");
        for a in &self.answers {
            let verdict = match a.verdict {
                Verdict::Consistent => "consistent",
                Verdict::Inconsistent => "inconsistent",
                Verdict::Unknown => "unknown",
            };
            let by = match a.decided_by {
                DecidedBy::ConsistentPart => "consistent-part",
                DecidedBy::Solver => "solver",
            };
            let _ = writeln!(s, "{:<width$}  {:<12}  {by}", format_tuple(&a.answer), verdict);
        }
        let _ = writeln!(
            s,
            "\npath={} iterations={} complete={} variables={} clauses={} encode={:.4}s solve={:.4}s",
            self.path,
            self.iterations,
            self.complete,
            self.variables,
            self.clauses,
            self.encode_seconds,
            self.solve_seconds
        );
        s
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("answer {0} is not a potential answer")]
    UnknownAnswer(String),
    #[error("expected a boolean query")]
    NotBoolean,
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Encoding path chosen for a problem.
fn uses_native_keys(p: &Problem<'_>, cfg: &EngineConfig) -> bool {
    cfg.key_path == KeyPath::Native && p.dcs.is_empty()
}

/// Full constraint set as denial constraints: schema keys plus `dcs`.
pub fn all_denials(p: &Problem<'_>) -> Vec<DenialConstraint> {
    let mut sigma = schema_key_denials(p.instance.schema());
    sigma.extend(p.dcs.iter().cloned());
    sigma
}

/// Everything computed before solving.
pub struct Prepared {
    pub witnesses: WitnessIndex,
    pub violations: Option<ViolationIndex>,
    pub encoding: Encoding,
}

pub fn prepare(p: &Problem<'_>, cfg: &EngineConfig) -> Prepared {
    let witnesses = minimal_witnesses(p.query, p.instance);
    if uses_native_keys(p, cfg) {
        let encoding = encode_keys(p.instance, &witnesses, false, cfg.optimize);
        Prepared {
            witnesses,
            violations: None,
            encoding,
        }
    } else {
        let v = violation_index(&all_denials(p), p.instance);
        let encoding = encode_denial(p.instance, &v, &witnesses, cfg.optimize);
        Prepared {
            witnesses,
            violations: Some(v),
            encoding,
        }
    }
}

fn run_maxsat(w: &Wcnf, cfg: &EngineConfig) -> Result<Model, SolveError> {
    match &cfg.solver {
        SolverChoice::Internal => maxsat_solve(w, &cfg.solver_config),
        SolverChoice::External(s) => external_solve(s, w),
    }
}

/// Consistent answers of the query.
pub fn consistent_answers(p: &Problem<'_>, cfg: &EngineConfig) -> Result<AnswerReport, EngineError> {
    let t0 = Instant::now();
    let prep = prepare(p, cfg);
    let encode_seconds = t0.elapsed().as_secs_f64();
    let e = &prep.encoding;

    let mut answers: Vec<AnswerVerdict> = e
        .answers
        .iter()
        .enumerate()
        .map(|(l, a)| AnswerVerdict {
            answer: a.clone(),
            verdict: if e.decided[l] {
                Verdict::Consistent
            } else {
                Verdict::Unknown
            },
            decided_by: if e.decided[l] {
                DecidedBy::ConsistentPart
            } else {
                DecidedBy::Solver
            },
            eliminated_in: None,
        })
        .collect();

    let t1 = Instant::now();
    let open: Vec<usize> = e.open().collect();
    let (iterations, complete, models) = match cfg.strategy {
        Strategy::MaxSat => eliminate_loop(e, &open, &mut answers, cfg)?,
        Strategy::IterSat => iterative_sat(e, &open, &mut answers, cfg)?,
    };
    let solve_seconds = t1.elapsed().as_secs_f64();

    Ok(AnswerReport {
        path: if prep.violations.is_some() {
            "denial"
        } else {
            "keys"
        },
        strategy: cfg.strategy,
        optimize: cfg.optimize,
        answers,
        iterations,
        complete,
        variables: e.formula.num_vars(),
        clauses: e.formula.len(),
        soft_clauses: open.len(),
        stats: e.formula.stats.clone(),
        encode_seconds,
        solve_seconds,
        witnesses: prep.witnesses.witnesses,
        models,
        fact_vars: e.formula.vars.facts().collect(),
    })
}

type LoopResult = (usize, bool, Vec<Vec<bool>>);

/// MaxSAT elimination loop: solve, eliminate every answer whose `p` is true, drop the
/// clauses containing its negation, assert the negation, repeat.
fn eliminate_loop(
    e: &Encoding,
    open: &[usize],
    answers: &mut [AnswerVerdict],
    cfg: &EngineConfig,
) -> Result<LoopResult, EngineError> {
    let original: Vec<Vec<Lit>> = e.formula.clauses.iter().map(|c| c.lits.clone()).collect();
    let mut hard = original.clone();
    let mut soft: Vec<usize> = open.to_vec();
    let mut models = Vec::new();
    let mut iterations = 0;
    while !soft.is_empty() {
        iterations += 1;
        let w = Wcnf {
            num_vars: e.formula.num_vars(),
            hard: hard.clone(),
            soft: soft
                .iter()
                .map(|&l| (1, vec![e.p(l).expect("open answer").pos()]))
                .collect(),
        };
        let model = match run_maxsat(&w, cfg) {
            Ok(m) => m,
            Err(SolveError::Unknown) => return Ok((iterations, false, models)),
            Err(err) => return Err(err.into()),
        };
        if let Some(c) = original.iter().find(|c| !clause_satisfied(c, &model.assignment)) {
            return Err(EngineError::Invariant(format!(
                "iteration {iterations}: optimum falsifies {}",
                e.formula.render_clause(c)
            )));
        }
        let newly: Vec<usize> = soft
            .iter()
            .copied()
            .filter(|&l| model.value(e.p(l).expect("open answer").pos()))
            .collect();
        if newly.is_empty() {
            break;
        }
        let gone: HashSet<Lit> = newly.iter().map(|&l| e.p(l).expect("open").neg()).collect();
        hard.retain(|c| !c.iter().any(|l| gone.contains(l)));
        for &l in &newly {
            answers[l].verdict = Verdict::Inconsistent;
            answers[l].eliminated_in = Some(iterations);
            hard.push(vec![e.p(l).expect("open").neg()]);
        }
        soft.retain(|l| !newly.contains(l));
        models.push(model.assignment);
    }
    for &l in &soft {
        answers[l].verdict = Verdict::Consistent;
    }
    Ok((iterations, true, models))
}

/// Require some remaining `p`, solve, strike the true ones, repeat until
/// unsatisfiable. Always uses the internal solver.
fn iterative_sat(
    e: &Encoding,
    open: &[usize],
    answers: &mut [AnswerVerdict],
    cfg: &EngineConfig,
) -> Result<LoopResult, EngineError> {
    let mut s = Solver::new(e.formula.num_vars(), cfg.solver_config.seed);
    s.set_budget(cfg.solver_config.conflict_budget);
    for c in &e.formula.clauses {
        if !s.add_clause(&c.lits) {
            return Err(SolveError::HardUnsat.into());
        }
    }
    let mut active: Vec<usize> = open.to_vec();
    let mut models = Vec::new();
    let mut iterations = 0;
    while !active.is_empty() {
        iterations += 1;
        let act = s.new_var();
        let mut c: Vec<Lit> = active.iter().map(|&l| e.p(l).expect("open").pos()).collect();
        c.push(act.neg());
        s.add_clause(&c);
        let r = s.solve(&[act.pos()]);
        s.add_clause(&[act.neg()]);
        match r {
            SatResult::Sat => {
                let m = s.model()[..e.formula.num_vars() as usize].to_vec();
                let newly: Vec<usize> = active
                    .iter()
                    .copied()
                    .filter(|&l| e.p(l).expect("open").pos().eval(&m))
                    .collect();
                for &l in &newly {
                    answers[l].verdict = Verdict::Inconsistent;
                    answers[l].eliminated_in = Some(iterations);
                }
                active.retain(|l| !newly.contains(l));
                models.push(m);
            }
            SatResult::Unsat => break,
            SatResult::Unknown => return Ok((iterations, false, models)),
        }
    }
    for &l in &active {
        answers[l].verdict = Verdict::Consistent;
    }
    Ok((iterations, true, models))
}

/// Whether a boolean query holds in every repair.
pub fn certain_boolean(p: &Problem<'_>, cfg: &EngineConfig) -> Result<bool, EngineError> {
    if !p.query.is_boolean() {
        return Err(EngineError::NotBoolean);
    }
    let w = minimal_witnesses(p.query, p.instance);
    if w.is_empty() {
        return Ok(false);
    }
    let (e, assumptions) = if uses_native_keys(p, cfg) {
        (encode_keys(p.instance, &w, true, cfg.optimize), Vec::new())
    } else {
        let v = violation_index(&all_denials(p), p.instance);
        let e = encode_denial(p.instance, &v, &w, cfg.optimize);
        let a = e.p(0).map(|v| vec![v.pos()]).unwrap_or_default();
        (e, a)
    };
    if e.decided[0] {
        return Ok(true);
    }
    match solve_under_assumptions(&e.formula.to_cnf(), &assumptions, &cfg.solver_config) {
        SatOutcome::Sat(_) => Ok(false),
        SatOutcome::Unsat => Ok(true),
        SatOutcome::Unknown => Err(SolveError::Unknown.into()),
    }
}

/// Why an answer got its verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Explanation {
    /// A witness contained in every repair.
    Witness {
        facts: Vec<FactId>,
    },
    /// A repair in which the answer does not hold.
    FalsifyingRepair {
        facts: Vec<FactId>,
    },
    /// Consistent by the solver: no repair falsifies it.
    NoFalsifyingRepair {
        witnesses: Vec<Vec<FactId>>,
    },
    Undecided,
}

pub fn explain(answer: &[Value], report: &AnswerReport, p: &Problem<'_>) -> Result<Explanation, EngineError> {
    let l = report
        .answers
        .iter()
        .position(|a| a.answer.as_slice() == answer)
        .ok_or_else(|| EngineError::UnknownAnswer(format_tuple(answer)))?;
    let a = &report.answers[l];
    match (a.verdict, a.decided_by) {
        (Verdict::Consistent, DecidedBy::ConsistentPart) => {
            let conflicting = conflicting_facts(report, p);
            let w = report.witnesses[l]
                .iter()
                .find(|w| w.iter().all(|f| !conflicting.contains(f)))
                .cloned()
                .unwrap_or_default();
            Ok(Explanation::Witness { facts: w })
        }
        (Verdict::Consistent, DecidedBy::Solver) => Ok(Explanation::NoFalsifyingRepair {
            witnesses: report.witnesses[l].clone(),
        }),
        (Verdict::Inconsistent, _) => {
            let it = a
                .eliminated_in
                .expect("eliminated answers record their iteration");
            let model = &report.models[it - 1];
            Ok(Explanation::FalsifyingRepair {
                facts: decode_repair(report, model, p),
            })
        }
        (Verdict::Unknown, _) => Ok(Explanation::Undecided),
    }
}

fn conflicting_facts(report: &AnswerReport, p: &Problem<'_>) -> HashSet<FactId> {
    if report.path == "keys" {
        p.instance
            .all_key_groups()
            .into_iter()
            .filter(|g| g.len() > 1)
            .flatten()
            .collect()
    } else {
        violation_index(&all_denials(p), p.instance)
            .violations
            .into_iter()
            .flatten()
            .collect()
    }
}

/// Build a repair from the fact variables of a model: keep the facts set
/// true, add every fact outside the encoding's scope that keeps the set
/// consistent.
fn decode_repair(report: &AnswerReport, model: &[bool], p: &Problem<'_>) -> Vec<FactId> {
    let inst = p.instance;
    let mut has_var = vec![None; inst.len() + 1];
    for &(f, v) in &report.fact_vars {
        has_var[f.0 as usize] = Some(v.pos().eval(model));
    }
    let mut keep = vec![false; inst.len() + 1];
    if report.path == "keys" {
        for g in inst.all_key_groups() {
            let chosen = g
                .iter()
                .copied()
                .find(|f| has_var[f.0 as usize] == Some(true))
                .unwrap_or(g[0]);
            keep[chosen.0 as usize] = true;
        }
    } else {
        let v = violation_index(&all_denials(p), inst);
        for f in inst.fact_ids() {
            if has_var[f.0 as usize] == Some(true) {
                keep[f.0 as usize] = true;
            }
        }
        // Facts without a variable, then any fact left out, in id order.
        let mut by_fact: Vec<Vec<usize>> = vec![Vec::new(); inst.len() + 1];
        for (i, viol) in v.violations.iter().enumerate() {
            for f in viol {
                by_fact[f.0 as usize].push(i);
            }
        }
        let order: Vec<FactId> = inst
            .fact_ids()
            .filter(|f| has_var[f.0 as usize].is_none())
            .chain(inst.fact_ids().filter(|f| has_var[f.0 as usize] == Some(false)))
            .collect();
        for f in order {
            if keep[f.0 as usize] {
                continue;
            }
            let blocked = by_fact[f.0 as usize]
                .iter()
                .any(|&i| v.violations[i].iter().all(|g| *g == f || keep[g.0 as usize]));
            if !blocked {
                keep[f.0 as usize] = true;
            }
        }
    }
    inst.fact_ids().filter(|f| keep[f.0 as usize]).collect()
}

/// Describe a variable of an encoding, for debugging output.
pub fn describe_var(e: &Encoding, v: Var) -> String {
    match e.formula.vars.kind(v) {
        VarKind::Answer(l) => format!("{} ({})", e.formula.vars.name(v), format_tuple(&e.answers[l])),
        _ => e.formula.vars.name(v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceBuilder;
    use crate::query::parse_query;
    use crate::schema::Schema;

    fn inst() -> Instance {
        let s = Schema::parse("R(A* integer, B integer)").unwrap();
        let mut b = InstanceBuilder::new(s);
        for (x, y) in [(1, 1), (1, 2), (2, 1)] {
            b.insert("R", vec![Value::Integer(x), Value::Integer(y)]).unwrap();
        }
        b.finish()
    }

    #[test]
    fn consistent_instance_needs_no_solver() {
        let s = Schema::parse("R(A* integer, B integer)").unwrap();
        let mut b = InstanceBuilder::new(s);
        b.insert("R", vec![Value::Integer(1), Value::Integer(1)]).unwrap();
        let i = b.finish();
        let q = parse_query("q(y) :- R(x,y)", i.schema()).unwrap();
        let r = consistent_answers(
            &Problem {
                instance: &i,
                dcs: &[],
                query: &q,
            },
            &EngineConfig::default(),
        )
        .unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.consistent().len(), 1);
    }

    #[test]
    fn strategies_agree() {
        let i = inst();
        let q = parse_query("q(y) :- R(x,y)", i.schema()).unwrap();
        let p = Problem {
            instance: &i,
            dcs: &[],
            query: &q,
        };
        for strategy in [Strategy::MaxSat, Strategy::IterSat] {
            for optimize in [false, true] {
                let cfg = EngineConfig {
                    strategy,
                    optimize,
                    ..EngineConfig::default()
                };
                let r = consistent_answers(&p, &cfg).unwrap();
                assert_eq!(r.consistent(), vec![&vec![Value::Integer(1)]]);
                assert_eq!(r.inconsistent(), vec![&vec![Value::Integer(2)]]);
                assert!(r.iterations <= 2);
            }
        }
    }

    #[test]
    fn boolean_certainty() {
        let i = inst();
        let p = |q| Problem {
            instance: &i,
            dcs: &[],
            query: q,
        };
        let yes = parse_query("q() :- R(x, 1)", i.schema()).unwrap();
        let no = parse_query("q() :- R(1, 2)", i.schema()).unwrap();
        for key_path in [KeyPath::Native, KeyPath::Denial] {
            for optimize in [false, true] {
                let cfg = EngineConfig {
                    key_path,
                    optimize,
                    ..EngineConfig::default()
                };
                assert!(certain_boolean(&p(&yes), &cfg).unwrap());
                assert!(!certain_boolean(&p(&no), &cfg).unwrap());
            }
        }
    }
}
