//! Conflict-driven clause learning SAT solver.
//!
//! Two watched literals with blockers, VSIDS on a binary heap, phase saving,
//! Luby restarts, first-UIP learning with local minimization, LBD-based
//! learned clause reduction, and solving under assumptions. Clauses may be
//! added between calls.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{Lit, Var};

const TRUE: u8 = 1;
const FALSE: u8 = 0;
const UNDEF: u8 = 2;
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatResult {
    Sat,
    Unsat,
    /// Conflict budget exhausted.
    Unknown,
}

#[derive(Debug, Clone, Copy)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

#[derive(Debug, Clone)]
struct ClauseRec {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    lbd: u32,
    activity: f32,
}

#[derive(Debug, Clone, Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<u32>,
}

impl VarHeap {
    fn grow(&mut self, n: usize) {
        self.pos.resize(n, NONE);
    }

    fn contains(&self, v: usize) -> bool {
        self.pos[v] != NONE
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let pv = self.heap[parent];
            if act[pv as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = pv;
            self.pos[pv as usize] = i as u32;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as u32;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            let cv = self.heap[c];
            if act[cv as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = cv;
            self.pos[cv as usize] = i as u32;
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as u32;
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v as u32);
        let i = self.heap.len() - 1;
        self.pos[v] = i as u32;
        self.up(i, act);
    }

    fn bumped(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            self.up(self.pos[v] as usize, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("nonempty");
        self.pos[top as usize] = NONE;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.down(0, act);
        }
        Some(top as usize)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
    pub solves: u64,
}

#[derive(Debug, Clone)]
pub struct Solver {
    ok: bool,
    clauses: Vec<ClauseRec>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watcher>>,
    assign: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f32,
    heap: VarHeap,
    phase: Vec<bool>,
    seen: Vec<bool>,
    model: Vec<bool>,
    max_learnts: f64,
    budget: Option<u64>,
    rng: ChaCha8Rng,
    stats: SolverStats,
}

fn luby(y: f64, mut x: u64) -> f64 {
    let mut size = 1u64;
    let mut seq = 0i32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq)
}

impl Solver {
    pub fn new(num_vars: u32, seed: u64) -> Self {
        let mut s = Solver {
            ok: true,
            clauses: Vec::new(),
            learnts: Vec::new(),
            watches: Vec::new(),
            assign: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            heap: VarHeap::default(),
            phase: Vec::new(),
            seen: Vec::new(),
            model: Vec::new(),
            max_learnts: 0.0,
            budget: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
            stats: SolverStats::default(),
        };
        s.reserve_vars(num_vars);
        s
    }

    pub fn num_vars(&self) -> u32 {
        self.assign.len() as u32
    }

    /// Make sure variables `1..=n` exist.
    pub fn reserve_vars(&mut self, n: u32) {
        let n = n as usize;
        let old = self.assign.len();
        if n <= old {
            return;
        }
        self.assign.resize(n, UNDEF);
        self.level.resize(n, 0);
        self.reason.resize(n, NONE);
        self.phase.resize(n, false);
        self.seen.resize(n, false);
        self.watches.resize(2 * n, Vec::new());
        self.heap.grow(n);
        for _ in old..n {
            let jitter = self.rng.gen::<f64>() * 1e-5;
            self.activity.push(jitter);
        }
        for v in old..n {
            self.heap.insert(v, &self.activity);
        }
    }

    pub fn new_var(&mut self) -> Var {
        let n = self.num_vars() + 1;
        self.reserve_vars(n);
        Var(n)
    }

    /// Preferred value for a variable when branching on it for the first time.
    pub fn set_phase(&mut self, v: Var, value: bool) {
        self.reserve_vars(v.0);
        self.phase[v.index()] = value;
    }

    /// Limit the conflicts of each later `solve` call.
    pub fn set_budget(&mut self, conflicts: Option<u64>) {
        self.budget = conflicts;
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    /// False once the clause set is unsatisfiable without assumptions.
    pub fn is_ok(&self) -> bool {
        self.ok
    }

    fn value(&self, l: Lit) -> u8 {
        let a = self.assign[l.var().index()];
        if a == UNDEF {
            UNDEF
        } else {
            a ^ l.is_neg() as u8
        }
    }

    /// Value fixed at decision level 0, if any.
    pub fn fixed_value(&self, v: Var) -> Option<bool> {
        let i = v.index();
        if i < self.assign.len() && self.assign[i] != UNDEF && self.level[i] == 0 {
            Some(self.assign[i] == TRUE)
        } else {
            None
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, from: u32) {
        let v = l.var().index();
        debug_assert_eq!(self.assign[v], UNDEF);
        self.assign[v] = (!l.is_neg()) as u8;
        self.level[v] = self.decision_level();
        self.reason[v] = from;
        self.trail.push(l);
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool, lbd: u32) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[lits[0].code()].push(Watcher {
            cref,
            blocker: lits[1],
        });
        self.watches[lits[1].code()].push(Watcher {
            cref,
            blocker: lits[0],
        });
        self.clauses.push(ClauseRec {
            lits,
            learnt,
            deleted: false,
            lbd,
            activity: 0.0,
        });
        if learnt {
            self.learnts.push(cref);
        }
        cref
    }

    /// Add a clause. Returns false when the clause set became unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        self.cancel_until(0);
        let max_var = lits.iter().map(|l| l.var().0).max().unwrap_or(0);
        self.reserve_vars(max_var);
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        let mut out = Vec::with_capacity(c.len());
        for (i, &l) in c.iter().enumerate() {
            if i + 1 < c.len() && c[i + 1] == !l {
                return true;
            }
            match self.value(l) {
                TRUE => return true,
                FALSE => {}
                _ => out.push(l),
            }
        }
        match out.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(out[0], NONE);
                if self.propagate() != NONE {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                self.attach(out, false, 0);
                true
            }
        }
    }

    fn propagate(&mut self) -> u32 {
        let mut conflict = NONE;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                {
                    let c = &mut self.clauses[cref].lits;
                    if c[0] == false_lit {
                        c.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                let nw = Watcher {
                    cref: w.cref,
                    blocker: first,
                };
                if first != w.blocker && self.value(first) == TRUE {
                    ws[j] = nw;
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[cref].lits[k];
                    if self.value(l) != FALSE {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[l.code()].push(nw);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = nw;
                j += 1;
                if self.value(first) == FALSE {
                    conflict = w.cref;
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, w.cref);
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict != NONE {
                break;
            }
        }
        conflict
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let start = self.trail_lim[level as usize];
        for k in (start..self.trail.len()).rev() {
            let l = self.trail[k];
            let v = l.var().index();
            self.phase[v] = !l.is_neg();
            self.assign[v] = UNDEF;
            self.reason[v] = NONE;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(start);
        self.trail_lim.truncate(level as usize);
        self.qhead = self.trail.len();
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: usize) {
        let c = &mut self.clauses[cref];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &r in &self.learnts {
                self.clauses[r as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, u32) {
        let mut learnt: Vec<Lit> = vec![Lit::from_code(0)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let dl = self.decision_level();
        loop {
            let cref = confl as usize;
            self.bump_clause(cref);
            let start = usize::from(p.is_some());
            let len = self.clauses[cref].lits.len();
            for k in start..len {
                let q = self.clauses[cref].lits[k];
                let v = q.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = true;
                    if self.level[v] >= dl {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().index()] {
                    break;
                }
            }
            let lit = self.trail[index];
            let v = lit.var().index();
            confl = self.reason[v];
            self.seen[v] = false;
            p = Some(lit);
            path -= 1;
            if path == 0 {
                break;
            }
        }
        learnt[0] = !p.expect("uip");

        // Drop literals implied by other literals of the clause.
        let mut keep = vec![learnt[0]];
        for &l in &learnt[1..] {
            let v = l.var().index();
            let r = self.reason[v];
            let redundant = r != NONE
                && self.clauses[r as usize].lits[1..].iter().all(|q| {
                    let qv = q.var().index();
                    self.seen[qv] || self.level[qv] == 0
                });
            if !redundant {
                keep.push(l);
            }
        }
        for &l in &learnt[1..] {
            self.seen[l.var().index()] = false;
        }
        let mut learnt = keep;

        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for k in 2..learnt.len() {
                if self.level[learnt[k].var().index()] > self.level[learnt[max_i].var().index()] {
                    max_i = k;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[learnt[1].var().index()];
        }
        (learnt, bt)
    }

    fn lbd(&self, lits: &[Lit]) -> u32 {
        let mut levels: Vec<u32> = lits.iter().map(|l| self.level[l.var().index()]).collect();
        levels.sort_unstable();
        levels.dedup();
        levels.len() as u32
    }

    fn locked(&self, cref: u32) -> bool {
        let c = &self.clauses[cref as usize];
        let l = c.lits[0];
        self.value(l) == TRUE && self.reason[l.var().index()] == cref
    }

    fn reduce_db(&mut self) {
        let mut cands: Vec<u32> = self
            .learnts
            .iter()
            .copied()
            .filter(|&c| self.clauses[c as usize].lbd > 2 && !self.locked(c))
            .collect();
        cands.sort_by(|&a, &b| {
            let (ca, cb) = (&self.clauses[a as usize], &self.clauses[b as usize]);
            cb.lbd.cmp(&ca.lbd).then(
                ca.activity
                    .partial_cmp(&cb.activity)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
        });
        let remove = cands.len() / 2;
        if remove == 0 {
            return;
        }
        for &c in &cands[..remove] {
            let rec = &mut self.clauses[c as usize];
            rec.deleted = true;
            rec.lits = Vec::new();
        }
        self.learnts.retain(|&c| !self.clauses[c as usize].deleted);
        let clauses = &self.clauses;
        for ws in &mut self.watches {
            ws.retain(|w| !clauses[w.cref as usize].deleted);
        }
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assign[v] == UNDEF {
                return Some(Lit::new(Var(v as u32 + 1), !self.phase[v]));
            }
        }
        None
    }

    fn search(
        &mut self,
        nof_conflicts: u64,
        assumptions: &[Lit],
        conflicts_left: &mut Option<u64>,
    ) -> SatResult {
        let mut local = 0u64;
        loop {
            let confl = self.propagate();
            if confl != NONE {
                self.stats.conflicts += 1;
                local += 1;
                if let Some(c) = conflicts_left {
                    *c = c.saturating_sub(1);
                }
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SatResult::Unsat;
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NONE);
                } else {
                    let lbd = self.lbd(&learnt);
                    let first = learnt[0];
                    let cref = self.attach(learnt, true, lbd);
                    self.bump_clause(cref as usize);
                    self.enqueue(first, cref);
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
                continue;
            }
            if local >= nof_conflicts || *conflicts_left == Some(0) {
                self.cancel_until(0);
                return SatResult::Unknown;
            }
            if self.learnts.len() as f64 - self.trail.len() as f64 >= self.max_learnts {
                self.reduce_db();
                self.max_learnts *= 1.1;
            }
            let mut next = None;
            while (self.decision_level() as usize) < assumptions.len() {
                let a = assumptions[self.decision_level() as usize];
                match self.value(a) {
                    TRUE => self.trail_lim.push(self.trail.len()),
                    FALSE => return SatResult::Unsat,
                    _ => {
                        next = Some(a);
                        break;
                    }
                }
            }
            let next = match next {
                Some(l) => l,
                None => {
                    self.stats.decisions += 1;
                    match self.pick_branch() {
                        Some(l) => l,
                        None => return SatResult::Sat,
                    }
                }
            };
            self.trail_lim.push(self.trail.len());
            self.enqueue(next, NONE);
        }
    }

    /// Solve under assumptions. On `Sat` the model is available through
    /// [`Solver::model`].
    pub fn solve(&mut self, assumptions: &[Lit]) -> SatResult {
        self.stats.solves += 1;
        if !self.ok {
            return SatResult::Unsat;
        }
        let max_var = assumptions.iter().map(|l| l.var().0).max().unwrap_or(0);
        self.reserve_vars(max_var);
        self.cancel_until(0);
        if self.max_learnts == 0.0 {
            self.max_learnts = (self.clauses.len() as f64 / 3.0).max(2000.0);
        }
        let mut left = self.budget;
        let mut restart = 0u64;
        let result = loop {
            let limit = (luby(2.0, restart) * 100.0) as u64;
            match self.search(limit, assumptions, &mut left) {
                SatResult::Unknown => {
                    if left == Some(0) {
                        break SatResult::Unknown;
                    }
                    restart += 1;
                    self.stats.restarts += 1;
                }
                r => break r,
            }
        };
        if result == SatResult::Sat {
            self.model = self.assign.iter().map(|&a| a == TRUE).collect();
        }
        self.cancel_until(0);
        result
    }

    /// Assignment of the last satisfying call, indexed by `var.index()`.
    pub fn model(&self) -> &[bool] {
        &self.model
    }

    pub fn model_value(&self, l: Lit) -> bool {
        l.eval(&self.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lits(v: &[i64]) -> Vec<Lit> {
        v.iter().map(|&d| Lit::from_dimacs(d)).collect()
    }

    #[test]
    fn luby_sequence() {
        let s: Vec<f64> = (0..7).map(|i| luby(2.0, i)).collect();
        assert_eq!(s, vec![1.0, 1.0, 2.0, 1.0, 1.0, 2.0, 4.0]);
    }

    #[test]
    fn contradiction() {
        let mut s = Solver::new(1, 0);
        s.add_clause(&lits(&[1]));
        s.add_clause(&lits(&[-1]));
        assert_eq!(s.solve(&[]), SatResult::Unsat);
    }

    #[test]
    fn assumptions_do_not_stick() {
        let mut s = Solver::new(2, 0);
        s.add_clause(&lits(&[1, 2]));
        assert_eq!(s.solve(&lits(&[-1, -2])), SatResult::Unsat);
        assert_eq!(s.solve(&[]), SatResult::Sat);
        assert_eq!(s.solve(&lits(&[-1])), SatResult::Sat);
        assert!(s.model_value(Lit::from_dimacs(2)));
    }

    #[test]
    fn pigeonhole_unsat() {
        // 4 pigeons, 3 holes.
        let p = |i: i64, j: i64| i * 3 + j + 1;
        let mut s = Solver::new(12, 1);
        for i in 0..4 {
            s.add_clause(&lits(&[p(i, 0), p(i, 1), p(i, 2)]));
        }
        for j in 0..3 {
            for a in 0..4 {
                for b in a + 1..4 {
                    s.add_clause(&lits(&[-p(a, j), -p(b, j)]));
                }
            }
        }
        assert_eq!(s.solve(&[]), SatResult::Unsat);
    }

    #[test]
    fn budget_gives_unknown() {
        let p = |i: i64, j: i64| i * 7 + j + 1;
        let mut s = Solver::new(56, 1);
        for i in 0..8 {
            s.add_clause(&(0..7).map(|j| Lit::from_dimacs(p(i, j))).collect::<Vec<_>>());
        }
        for j in 0..7 {
            for a in 0..8 {
                for b in a + 1..8 {
                    s.add_clause(&lits(&[-p(a, j), -p(b, j)]));
                }
            }
        }
        s.set_budget(Some(10));
        assert_eq!(s.solve(&[]), SatResult::Unknown);
    }
}
