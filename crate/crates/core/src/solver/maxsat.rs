//! Weighted partial MaxSAT by SAT-UNSAT linear search.
//!
//! Non-unit soft clauses get a relaxation literal. Hard clauses are
//! simplified by top-level unit propagation and split into independent
//! components; each component is optimized on its own: find a model,
//! bound the falsified soft weight below its cost with a totalizer, and
//! repeat until the bound is unsatisfiable.

use crate::formula::{clause_satisfied, Lit, Var, Wcnf};

use super::card::totalizer;
use super::cdcl::{SatResult, Solver};
use super::{Model, SolveError, SolverConfig};

struct UnionFind(Vec<u32>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n as u32).collect())
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.0[x as usize] != x {
            let p = self.0[x as usize];
            self.0[x as usize] = self.0[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb) as usize] = ra.min(rb);
        }
    }
}

#[derive(Default)]
struct Component {
    vars: Vec<Var>,
    clauses: Vec<Vec<Lit>>,
    softs: Vec<(u64, Lit)>,
}

/// Statistics of one MaxSAT call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MaxSatStats {
    pub components: usize,
    pub sat_calls: usize,
}

pub fn maxsat_with_stats(w: &Wcnf, cfg: &SolverConfig) -> Result<(Model, MaxSatStats), SolveError> {
    let mut stats = MaxSatStats::default();
    let mut nv = w
        .hard
        .iter()
        .chain(w.soft.iter().map(|(_, c)| c))
        .flatten()
        .map(|l| l.var().0)
        .max()
        .unwrap_or(0)
        .max(w.num_vars);
    let mut hard: Vec<Vec<Lit>> = w.hard.clone();
    let mut softs: Vec<(u64, Lit)> = Vec::new();
    for (wt, c) in &w.soft {
        if *wt == 0 || c.is_empty() {
            continue;
        }
        if c.len() == 1 {
            softs.push((*wt, c[0]));
        } else {
            nv += 1;
            let b = Var(nv);
            let mut relaxed = c.clone();
            relaxed.push(b.neg());
            hard.push(relaxed);
            softs.push((*wt, b.pos()));
        }
    }

    let mut top = Solver::new(nv, cfg.seed);
    for c in &hard {
        if !top.add_clause(c) {
            return Err(SolveError::HardUnsat);
        }
    }
    let fixed: Vec<Option<bool>> = (1..=nv).map(|v| top.fixed_value(Var(v))).collect();
    drop(top);
    let fixed_lit = |l: Lit| fixed[l.var().index()].map(|b| b != l.is_neg());

    let mut uf = UnionFind::new(nv as usize + 1);
    let mut open: Vec<Vec<Lit>> = Vec::new();
    for c in &hard {
        if c.iter().any(|&l| fixed_lit(l) == Some(true)) {
            continue;
        }
        let rest: Vec<Lit> = c.iter().copied().filter(|&l| fixed_lit(l).is_none()).collect();
        debug_assert!(!rest.is_empty(), "propagation would have found the conflict");
        for l in &rest[1..] {
            uf.union(rest[0].var().0, l.var().0);
        }
        open.push(rest);
    }
    let open_softs: Vec<(u64, Lit)> = softs
        .iter()
        .copied()
        .filter(|&(_, l)| fixed_lit(l).is_none())
        .collect();

    let mut comp_of: Vec<u32> = vec![u32::MAX; nv as usize + 1];
    let mut comps: Vec<Component> = Vec::new();
    let mut local: Vec<u32> = vec![0; nv as usize + 1];
    let mut slot = |v: Var, uf: &mut UnionFind, comps: &mut Vec<Component>| -> usize {
        let r = uf.find(v.0) as usize;
        if comp_of[r] == u32::MAX {
            comp_of[r] = comps.len() as u32;
            comps.push(Component::default());
        }
        comp_of[r] as usize
    };
    let touch = |v: Var, k: usize, comps: &mut Vec<Component>, local: &mut Vec<u32>| {
        if local[v.0 as usize] == 0 {
            comps[k].vars.push(v);
            local[v.0 as usize] = comps[k].vars.len() as u32;
        }
    };
    let map = |l: Lit, local: &[u32]| Lit::new(Var(local[l.var().0 as usize]), l.is_neg());
    for c in open {
        let k = slot(c[0].var(), &mut uf, &mut comps);
        for l in &c {
            touch(l.var(), k, &mut comps, &mut local);
        }
        let lc = c.iter().map(|&l| map(l, &local)).collect();
        comps[k].clauses.push(lc);
    }
    for (wt, l) in open_softs {
        let k = slot(l.var(), &mut uf, &mut comps);
        touch(l.var(), k, &mut comps, &mut local);
        let ll = map(l, &local);
        comps[k].softs.push((wt, ll));
    }
    stats.components = comps.len();

    let mut assignment: Vec<bool> = fixed.iter().map(|f| f.unwrap_or(false)).collect();
    for comp in &comps {
        let (m, calls) = solve_component(comp, cfg)?;
        stats.sat_calls += calls;
        for (i, v) in comp.vars.iter().enumerate() {
            assignment[v.index()] = m[i];
        }
    }

    if !hard.iter().all(|c| clause_satisfied(c, &assignment)) {
        return Err(SolveError::Internal("model violates a hard clause".into()));
    }
    assignment.truncate(w.num_vars as usize);
    let cost = w.cost(&assignment);
    Ok((Model { assignment, cost }, stats))
}

fn solve_component(comp: &Component, cfg: &SolverConfig) -> Result<(Vec<bool>, usize), SolveError> {
    let n = comp.vars.len() as u32;
    let mut s = Solver::new(n, cfg.seed);
    s.set_budget(cfg.conflict_budget);
    for c in &comp.clauses {
        if !s.add_clause(c) {
            return Err(SolveError::HardUnsat);
        }
    }
    for &(_, l) in &comp.softs {
        s.set_phase(l.var(), !l.is_neg());
    }
    let mut calls = 1;
    match s.solve(&[]) {
        SatResult::Sat => {}
        SatResult::Unsat => return Err(SolveError::HardUnsat),
        SatResult::Unknown => return Err(SolveError::Unknown),
    }
    let cost = |m: &[bool]| -> u64 {
        comp.softs
            .iter()
            .filter(|(_, l)| !l.eval(m))
            .map(|(w, _)| *w)
            .sum()
    };
    let mut best: Vec<bool> = s.model()[..n as usize].to_vec();
    let mut ub = cost(&best);
    if ub == 0 {
        return Ok((best, calls));
    }
    let mut next = n;
    let falsified: Vec<(u64, Lit)> = comp.softs.iter().map(|&(w, l)| (w, !l)).collect();
    let mut pending: Vec<Vec<Lit>> = Vec::new();
    let outputs = totalizer(
        &falsified,
        ub,
        &mut || {
            next += 1;
            Var(next)
        },
        &mut |c| pending.push(c.to_vec()),
    );
    s.reserve_vars(next);
    for c in &pending {
        s.add_clause(c);
    }
    loop {
        let mut ok = true;
        for &(sum, o) in &outputs {
            if sum >= ub {
                ok &= s.add_clause(&[!o]);
            }
        }
        if !ok {
            break;
        }
        calls += 1;
        match s.solve(&[]) {
            SatResult::Sat => {
                best = s.model()[..n as usize].to_vec();
                let c = cost(&best);
                debug_assert!(c < ub);
                ub = c;
                if ub == 0 {
                    break;
                }
            }
            SatResult::Unsat => break,
            SatResult::Unknown => return Err(SolveError::Unknown),
        }
    }
    Ok((best, calls))
}
