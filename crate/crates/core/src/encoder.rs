//! CNF construction for consistent query answering.
//!
//! Variables: `x_i` per fact, `p_l` per open potential answer, `x_true` for
//! the auxiliary fact, `y^i_j` per near-violation with more than one fact.
//! They are numbered in that order, facts by id and answers by index.
//!
//! Clause roles:
//! * alpha: repair consistency (key groups: some fact kept; violations:
//!   not all facts kept),
//! * beta: a kept witness of answer `l` contradicts `p_l`,
//! * gamma, theta: maximality, a dropped fact must be blocked by a kept
//!   near-violation; `y <-> x_1 & ... & x_d` is written as
//!   `(!y | x_1) ... (!y | x_d) (!x_1 | ... | !x_d | y)`,
//! * true-unit: asserts `x_true`.
//!
//! With `optimize`, answers having a witness inside the consistent part are
//! decided without encoding, and variables are only allocated for the facts
//! of the remaining witnesses plus facts sharing a key group or violation
//! with them.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::formula::{normalize_clause, Cnf, Lit, Var, Wcnf};
use crate::instance::{FactId, Instance};
use crate::value::Tuple;
use crate::witness::{ViolationIndex, WitnessIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Alpha,
    Beta,
    Gamma,
    Theta,
    TrueUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    /// `x_i` for a fact.
    Fact(FactId),
    /// `p_l` for answer index `l` (0-based).
    Answer(usize),
    /// `x_true`.
    True,
    /// `y^i_j`: near-violation `j` (0-based) of fact `i`.
    Near(FactId, usize),
}

#[derive(Debug, Clone, Default)]
pub struct VariableMap {
    kinds: Vec<VarKind>,
    x: HashMap<FactId, Var>,
    p: HashMap<usize, Var>,
    y: HashMap<(FactId, usize), Var>,
    x_true: Option<Var>,
}

impl VariableMap {
    fn alloc(&mut self, k: VarKind) -> Var {
        let v = Var(self.kinds.len() as u32 + 1);
        self.kinds.push(k);
        match k {
            VarKind::Fact(f) => {
                self.x.insert(f, v);
            }
            VarKind::Answer(l) => {
                self.p.insert(l, v);
            }
            VarKind::True => self.x_true = Some(v),
            VarKind::Near(f, j) => {
                self.y.insert((f, j), v);
            }
        }
        v
    }

    pub fn len(&self) -> u32 {
        self.kinds.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn x(&self, f: FactId) -> Option<Var> {
        if f.is_true_fact() {
            self.x_true
        } else {
            self.x.get(&f).copied()
        }
    }

    pub fn p(&self, l: usize) -> Option<Var> {
        self.p.get(&l).copied()
    }

    pub fn y(&self, f: FactId, j: usize) -> Option<Var> {
        self.y.get(&(f, j)).copied()
    }

    pub fn x_true(&self) -> Option<Var> {
        self.x_true
    }

    pub fn kind(&self, v: Var) -> VarKind {
        self.kinds[v.index()]
    }

    /// Facts with an allocated variable, in id order.
    pub fn facts(&self) -> impl Iterator<Item = (FactId, Var)> + '_ {
        self.kinds.iter().enumerate().filter_map(|(i, k)| match k {
            VarKind::Fact(f) => Some((*f, Var(i as u32 + 1))),
            _ => None,
        })
    }

    pub fn name(&self, v: Var) -> String {
        match self.kind(v) {
            VarKind::Fact(f) => format!("x{}", f.0),
            VarKind::Answer(l) => format!("p{}", l + 1),
            VarKind::True => "x_true".into(),
            VarKind::Near(f, j) => format!("y{}_{}", f.0, j + 1),
        }
    }

    pub fn lit_name(&self, l: Lit) -> String {
        if l.is_neg() {
            format!("-{}", self.name(l.var()))
        } else {
            self.name(l.var())
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RoleCounts {
    pub alpha: usize,
    pub beta: usize,
    pub gamma: usize,
    pub theta: usize,
    pub true_unit: usize,
}

impl RoleCounts {
    fn get_mut(&mut self, r: Role) -> &mut usize {
        match r {
            Role::Alpha => &mut self.alpha,
            Role::Beta => &mut self.beta,
            Role::Gamma => &mut self.gamma,
            Role::Theta => &mut self.theta,
            Role::TrueUnit => &mut self.true_unit,
        }
    }

    pub fn get(&self, r: Role) -> usize {
        match r {
            Role::Alpha => self.alpha,
            Role::Beta => self.beta,
            Role::Gamma => self.gamma,
            Role::Theta => self.theta,
            Role::TrueUnit => self.true_unit,
        }
    }

    pub fn total(&self) -> usize {
        self.alpha + self.beta + self.gamma + self.theta + self.true_unit
    }
}

/// Sizes measured while building a formula. `constructed` counts clauses
/// before deduplication, `emitted` after.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EncodeStats {
    pub facts: usize,
    pub x_vars: usize,
    pub p_vars: usize,
    pub y_vars: usize,
    pub true_vars: usize,
    pub constructed: RoleCounts,
    pub emitted: RoleCounts,
    pub max_len: RoleCounts,
    /// Number of `y` variables whose theta group was built.
    pub theta_groups: usize,
    /// Largest number of clauses produced by one theta expression.
    pub max_theta_group: usize,
    /// Facts that received a gamma clause.
    pub gamma_facts: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub role: Role,
    pub lits: Vec<Lit>,
}

#[derive(Debug, Clone, Default)]
pub struct CnfFormula {
    pub vars: VariableMap,
    pub clauses: Vec<Clause>,
    pub stats: EncodeStats,
    seen: HashSet<Vec<Lit>>,
}

impl CnfFormula {
    fn add(&mut self, role: Role, lits: Vec<Lit>) {
        debug_assert!(!lits.is_empty(), "empty clause");
        *self.stats.constructed.get_mut(role) += 1;
        let Some(c) = normalize_clause(lits) else {
            return;
        };
        let m = self.stats.max_len.get_mut(role);
        *m = (*m).max(c.len());
        if !self.seen.insert(c.clone()) {
            return;
        }
        *self.stats.emitted.get_mut(role) += 1;
        self.clauses.push(Clause { role, lits: c });
    }

    fn alloc(&mut self, k: VarKind) -> Var {
        match k {
            VarKind::Fact(_) => self.stats.x_vars += 1,
            VarKind::Answer(_) => self.stats.p_vars += 1,
            VarKind::True => self.stats.true_vars += 1,
            VarKind::Near(..) => self.stats.y_vars += 1,
        }
        self.vars.alloc(k)
    }

    pub fn num_vars(&self) -> u32 {
        self.vars.len()
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn by_role(&self, role: Role) -> impl Iterator<Item = &[Lit]> + '_ {
        self.clauses
            .iter()
            .filter(move |c| c.role == role)
            .map(|c| c.lits.as_slice())
    }

    pub fn to_cnf(&self) -> Cnf {
        Cnf {
            num_vars: self.num_vars(),
            clauses: self.clauses.iter().map(|c| c.lits.clone()).collect(),
        }
    }

    /// Clause rendered with variable names, e.g. `(-x2 | -x7 | -p1)`.
    pub fn render_clause(&self, lits: &[Lit]) -> String {
        let parts: Vec<String> = lits.iter().map(|&l| self.vars.lit_name(l)).collect();
        format!("({})", parts.join(" | "))
    }
}

impl fmt::Display for CnfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "{:?}: {}", c.role, self.render_clause(&c.lits))?;
        }
        Ok(())
    }
}

/// A formula together with the answers it speaks about.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub formula: CnfFormula,
    pub answers: Vec<Tuple>,
    /// `decided[l]`: answer `l` has a witness inside the consistent part and
    /// is therefore consistent without solving.
    pub decided: Vec<bool>,
    /// Boolean keys encodings carry no `p` variables.
    pub boolean: bool,
}

impl Encoding {
    pub fn p(&self, l: usize) -> Option<Var> {
        self.formula.vars.p(l)
    }

    /// Answers still to be decided by the solver.
    pub fn open(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.answers.len()).filter(|&l| !self.decided[l])
    }

    /// All clauses hard; one soft unit `(p_l)` of weight 1 per open answer.
    pub fn to_wcnf(&self) -> Wcnf {
        Wcnf {
            num_vars: self.formula.num_vars(),
            hard: self.formula.clauses.iter().map(|c| c.lits.clone()).collect(),
            soft: self
                .open()
                .filter_map(|l| self.p(l))
                .map(|v| (1, vec![v.pos()]))
                .collect(),
        }
    }
}

/// DIMACS text of the plain CNF formula.
pub fn export_cnf(e: &Encoding) -> String {
    e.formula.to_cnf().to_dimacs()
}

/// DIMACS WCNF text of the MaxSAT instance.
pub fn export_dimacs(e: &Encoding) -> String {
    e.to_wcnf().to_dimacs()
}

fn decide(w: &WitnessIndex, consistent: &[bool]) -> Vec<bool> {
    w.witnesses
        .iter()
        .map(|ws| ws.iter().any(|s| s.iter().all(|f| consistent[f.0 as usize])))
        .collect()
}

fn membership(instance: &Instance, facts: &[FactId]) -> Vec<bool> {
    let mut m = vec![false; instance.len() + 1];
    for f in facts {
        m[f.0 as usize] = true;
    }
    m
}

fn add_betas(
    phi: &mut CnfFormula,
    w: &WitnessIndex,
    decided: &[bool],
    consistent: Option<&[bool]>,
    with_p: bool,
) {
    for (l, ws) in w.witnesses.iter().enumerate() {
        if decided[l] {
            continue;
        }
        let p = phi.vars.p(l);
        for s in ws {
            let mut c: Vec<Lit> = s
                .iter()
                .filter(|f| consistent.is_none_or(|c| !c[f.0 as usize]))
                .map(|&f| phi.vars.x(f).expect("witness fact has a variable").neg())
                .collect();
            if with_p {
                c.push(p.expect("open answer has a variable").neg());
            }
            phi.add(Role::Beta, c);
        }
    }
}

/// Key-constraint encoding. With `boolean`, the query must be boolean and
/// beta clauses carry no answer literal: the formula is satisfiable iff some
/// repair falsifies the query. Otherwise a model with `p_l` true exists iff
/// answer `l` is not consistent.
pub fn encode_keys(instance: &Instance, w: &WitnessIndex, boolean: bool, optimize: bool) -> Encoding {
    let mut phi = CnfFormula::default();
    phi.stats.facts = instance.len();
    let (decided, consistent, scope_groups) = if optimize {
        // Only groups meeting some witness can matter.
        let touched: Vec<FactId> = w.witnesses.iter().flatten().flatten().copied().collect();
        let groups = instance.key_groups_containing(&touched);
        let mut c = vec![false; instance.len() + 1];
        let mut group_of = vec![usize::MAX; instance.len() + 1];
        for (g, members) in groups.iter().enumerate() {
            for f in members {
                c[f.0 as usize] = members.len() == 1;
                group_of[f.0 as usize] = g;
            }
        }
        let decided = decide(w, &c);
        // Groups touching an open witness fact outside the consistent part.
        let mut wanted = vec![false; groups.len()];
        for (l, ws) in w.witnesses.iter().enumerate() {
            if decided[l] {
                continue;
            }
            for f in ws.iter().flatten() {
                if !c[f.0 as usize] {
                    wanted[group_of[f.0 as usize]] = true;
                }
            }
        }
        let scope: Vec<Vec<FactId>> = groups
            .into_iter()
            .zip(wanted)
            .filter(|(_, keep)| *keep)
            .map(|(m, _)| m)
            .collect();
        (decided, Some(c), scope)
    } else {
        (vec![false; w.len()], None, instance.all_key_groups())
    };

    let mut in_scope: Vec<FactId> = scope_groups.iter().flat_map(|g| g.iter().copied()).collect();
    in_scope.sort_unstable();
    for f in in_scope {
        phi.alloc(VarKind::Fact(f));
    }
    if !boolean {
        for l in 0..w.len() {
            if !decided[l] {
                phi.alloc(VarKind::Answer(l));
            }
        }
    }
    for g in &scope_groups {
        let c = g
            .iter()
            .map(|&f| phi.vars.x(f).expect("allocated").pos())
            .collect();
        phi.add(Role::Alpha, c);
    }
    add_betas(&mut phi, w, &decided, consistent.as_deref(), !boolean);

    Encoding {
        formula: phi,
        answers: w.answers.clone(),
        decided,
        boolean,
    }
}

/// Denial-constraint encoding. Boolean queries are handled as a single
/// pseudo-answer `()` with its own `p` variable.
pub fn encode_denial(instance: &Instance, v: &ViolationIndex, w: &WitnessIndex, optimize: bool) -> Encoding {
    let mut phi = CnfFormula::default();
    phi.stats.facts = instance.len();
    let n = instance.len();
    let (decided, consistent, focus, scope) = if optimize {
        let c = membership(instance, &v.consistent_part(instance));
        let decided = decide(w, &c);
        let mut focus = vec![false; n + 1];
        for (l, ws) in w.witnesses.iter().enumerate() {
            if decided[l] {
                continue;
            }
            for s in ws {
                for f in s {
                    if !c[f.0 as usize] {
                        focus[f.0 as usize] = true;
                    }
                }
            }
        }
        let mut scope = focus.clone();
        for i in 1..=n {
            if focus[i] {
                for nv in v.near_of(FactId(i as u32)) {
                    for g in nv {
                        if !g.is_true_fact() {
                            scope[g.0 as usize] = true;
                        }
                    }
                }
            }
        }
        (decided, Some(c), focus, scope)
    } else {
        (vec![false; w.len()], None, vec![true; n + 1], vec![true; n + 1])
    };

    for i in 1..=n {
        if scope[i] {
            phi.alloc(VarKind::Fact(FactId(i as u32)));
        }
    }
    for l in 0..w.len() {
        if !decided[l] {
            phi.alloc(VarKind::Answer(l));
        }
    }
    let needs_true = (1..=n).any(|i| {
        focus[i]
            && v.near_of(FactId(i as u32))
                .iter()
                .any(|nv| nv.len() == 1 && nv[0].is_true_fact())
    });
    if needs_true {
        phi.alloc(VarKind::True);
    }
    for i in 1..=n {
        if !focus[i] {
            continue;
        }
        let f = FactId(i as u32);
        for (j, nv) in v.near_of(f).iter().enumerate() {
            if nv.len() > 1 {
                phi.alloc(VarKind::Near(f, j));
            }
        }
    }

    if let Some(t) = phi.vars.x_true() {
        phi.add(Role::TrueUnit, vec![t.pos()]);
    }
    for viol in &v.violations {
        if viol.iter().all(|f| scope[f.0 as usize]) {
            let c = viol
                .iter()
                .map(|&f| phi.vars.x(f).expect("allocated").neg())
                .collect();
            phi.add(Role::Alpha, c);
        }
    }
    add_betas(&mut phi, w, &decided, consistent.as_deref(), true);
    for i in 1..=n {
        if !focus[i] {
            continue;
        }
        let f = FactId(i as u32);
        phi.stats.gamma_facts += 1;
        let mut gamma = vec![phi.vars.x(f).expect("allocated").pos()];
        for (j, nv) in v.near_of(f).iter().enumerate() {
            if nv.len() == 1 {
                gamma.push(phi.vars.x(nv[0]).expect("allocated").pos());
                continue;
            }
            let y = phi.vars.y(f, j).expect("allocated");
            gamma.push(y.pos());
            let xs: Vec<Var> = nv.iter().map(|&g| phi.vars.x(g).expect("allocated")).collect();
            for &x in &xs {
                phi.add(Role::Theta, vec![y.neg(), x.pos()]);
            }
            let mut back: Vec<Lit> = xs.iter().map(|x| x.neg()).collect();
            back.push(y.pos());
            phi.add(Role::Theta, back);
            phi.stats.theta_groups += 1;
            phi.stats.max_theta_group = phi.stats.max_theta_group.max(xs.len() + 1);
        }
        phi.add(Role::Gamma, gamma);
    }

    Encoding {
        formula: phi,
        answers: w.answers.clone(),
        decided,
        boolean: false,
    }
}
