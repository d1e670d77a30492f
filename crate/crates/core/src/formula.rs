//! Propositional variables, literals, CNF and WCNF formulas, and the DIMACS
//! text formats (`p cnf V C` and the pre-2022 `p wcnf V C TOP`).

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

/// Variable, numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn pos(self) -> Lit {
        Lit::pos(self)
    }

    pub fn neg(self) -> Lit {
        Lit::neg(self)
    }
}

/// Literal packed as `2 * (var - 1) + negated`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn pos(v: Var) -> Lit {
        Lit((v.0 - 1) << 1)
    }

    pub fn neg(v: Var) -> Lit {
        Lit(((v.0 - 1) << 1) | 1)
    }

    pub fn new(v: Var, negated: bool) -> Lit {
        Lit(((v.0 - 1) << 1) | negated as u32)
    }

    pub fn from_code(code: usize) -> Lit {
        Lit(code as u32)
    }

    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn var(self) -> Var {
        Var((self.0 >> 1) + 1)
    }

    pub fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn from_dimacs(d: i64) -> Lit {
        debug_assert!(d != 0);
        Lit::new(Var(d.unsigned_abs() as u32), d < 0)
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var().0 as i64;
        if self.is_neg() {
            -v
        } else {
            v
        }
    }

    /// Truth value of the literal under a total assignment indexed by
    /// `var.index()`.
    pub fn eval(self, assignment: &[bool]) -> bool {
        assignment[self.var().index()] != self.is_neg()
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// Sort and deduplicate literals. Returns `None` for a tautology.
pub fn normalize_clause(mut lits: Vec<Lit>) -> Option<Vec<Lit>> {
    lits.sort_unstable();
    lits.dedup();
    if lits.windows(2).any(|w| w[0].var() == w[1].var()) {
        return None;
    }
    Some(lits)
}

pub fn clause_satisfied(clause: &[Lit], assignment: &[bool]) -> bool {
    clause.iter().any(|l| l.eval(assignment))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| clause_satisfied(c, assignment))
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            write_lits(&mut s, c);
        }
        s
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Wcnf {
    pub num_vars: u32,
    pub hard: Vec<Vec<Lit>>,
    pub soft: Vec<(u64, Vec<Lit>)>,
}

impl Wcnf {
    /// Weight marking hard clauses: one more than the total soft weight.
    pub fn top(&self) -> u64 {
        self.soft.iter().map(|(w, _)| *w).sum::<u64>() + 1
    }

    pub fn hard_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.hard.iter().all(|c| clause_satisfied(c, assignment))
    }

    /// Total weight of soft clauses falsified by the assignment.
    pub fn cost(&self, assignment: &[bool]) -> u64 {
        self.soft
            .iter()
            .filter(|(_, c)| !clause_satisfied(c, assignment))
            .map(|(w, _)| *w)
            .sum()
    }

    pub fn to_dimacs(&self) -> String {
        let top = self.top();
        let mut s = format!(
            "p wcnf {} {} {}\n",
            self.num_vars,
            self.hard.len() + self.soft.len(),
            top
        );
        for c in &self.hard {
            let _ = write!(s, "{top} ");
            write_lits(&mut s, c);
        }
        for (w, c) in &self.soft {
            let _ = write!(s, "{w} ");
            write_lits(&mut s, c);
        }
        s
    }
}

fn write_lits(s: &mut String, c: &[Lit]) {
    for l in c {
        let _ = write!(s, "{} ", l.to_dimacs());
    }
    s.push_str("0\n");
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DimacsError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing `p` header")]
    NoHeader,
}

/// Either kind of DIMACS formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dimacs {
    Cnf(Cnf),
    Wcnf(Wcnf),
}

/// Parse DIMACS CNF or pre-2022 WCNF text. Clauses may span lines; `c`
/// lines are comments. In WCNF, a clause with weight >= TOP is hard.
pub fn parse_dimacs(text: &str) -> Result<Dimacs, DimacsError> {
    let mut header: Option<(bool, u32, u64)> = None;
    let mut cnf = Cnf::default();
    let mut wcnf = Wcnf::default();
    let mut current: Vec<Lit> = Vec::new();
    let mut weight: Option<u64> = None;
    let err = |line: usize, m: &str| DimacsError::Parse {
        line: line + 1,
        message: m.to_string(),
    };
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(err(ln, "duplicate header"));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let num = |i: usize| -> Result<u64, DimacsError> {
                parts
                    .get(i)
                    .and_then(|p| p.parse::<u64>().ok())
                    .ok_or_else(|| err(ln, "malformed header"))
            };
            match parts.get(1) {
                Some(&"cnf") if parts.len() == 4 => {
                    header = Some((false, num(2)? as u32, 0));
                }
                Some(&"wcnf") if parts.len() == 5 => {
                    header = Some((true, num(2)? as u32, num(4)?));
                }
                _ => return Err(err(ln, "malformed header")),
            }
            continue;
        }
        let Some((weighted, nv, top)) = header else {
            return Err(DimacsError::NoHeader);
        };
        for tok in line.split_whitespace() {
            if weighted && weight.is_none() {
                weight = Some(tok.parse().map_err(|_| err(ln, "bad weight"))?);
                continue;
            }
            let d: i64 = tok.parse().map_err(|_| err(ln, "bad literal"))?;
            if d == 0 {
                let c = std::mem::take(&mut current);
                if weighted {
                    let w = weight.take().expect("weight read");
                    if w >= top {
                        wcnf.hard.push(c);
                    } else {
                        wcnf.soft.push((w, c));
                    }
                } else {
                    cnf.clauses.push(c);
                }
            } else {
                if d.unsigned_abs() > nv as u64 {
                    return Err(err(ln, "variable exceeds header count"));
                }
                current.push(Lit::from_dimacs(d));
            }
        }
    }
    let Some((weighted, nv, _)) = header else {
        return Err(DimacsError::NoHeader);
    };
    if !current.is_empty() || weight.is_some() {
        return Err(err(text.lines().count().saturating_sub(1), "unterminated clause"));
    }
    if weighted {
        wcnf.num_vars = nv;
        Ok(Dimacs::Wcnf(wcnf))
    } else {
        cnf.num_vars = nv;
        Ok(Dimacs::Cnf(cnf))
    }
}
