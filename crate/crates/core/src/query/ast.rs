use std::collections::HashMap;
use std::fmt;

use crate::schema::{RelId, Schema};
use crate::value::{Value, ValueKind};

use super::QueryError;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(Value),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(Value::Text(s)) => write!(f, "'{}'", s.replace('\'', "''")),
            Term::Const(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub relation: RelId,
    pub name: String,
    pub terms: Vec<Term>,
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl CmpOp {
    pub fn holds(self, lhs: &Value, rhs: &Value) -> bool {
        use std::cmp::Ordering::*;
        let Some(ord) = lhs.compare(rhs) else {
            return false;
        };
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Gt => ord == Greater,
            CmpOp::Le => ord != Greater,
            CmpOp::Ge => ord != Less,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Builtin {
    pub op: CmpOp,
    pub lhs: Term,
    pub rhs: Term,
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}

/// A conjunctive query `q(head) :- atoms, builtins`. Variables not in the
/// head are existentially quantified. An empty head makes it boolean.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjunctiveQuery {
    pub head: Vec<String>,
    pub atoms: Vec<Atom>,
    pub builtins: Vec<Builtin>,
}

impl ConjunctiveQuery {
    pub fn is_boolean(&self) -> bool {
        self.head.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.head.len()
    }

    /// Kind of every variable, taken from the columns it occupies.
    pub fn variable_kinds(&self, schema: &Schema) -> HashMap<String, ValueKind> {
        let mut kinds = HashMap::new();
        for a in &self.atoms {
            let rs = schema.relation(a.relation);
            for (t, attr) in a.terms.iter().zip(&rs.attributes) {
                if let Term::Var(v) = t {
                    kinds.entry(v.clone()).or_insert(attr.kind);
                }
            }
        }
        kinds
    }

    /// Check arity, kinds, safety and builtin binding against `schema`,
    /// coercing numeric constants to their column kinds.
    pub fn validate(&mut self, schema: &Schema) -> Result<(), QueryError> {
        let mut kinds: HashMap<String, ValueKind> = HashMap::new();
        for atom in &mut self.atoms {
            let rs = schema.relation(atom.relation);
            if atom.terms.len() != rs.arity() {
                return Err(QueryError::Arity {
                    relation: rs.name.clone(),
                    expected: rs.arity(),
                    found: atom.terms.len(),
                });
            }
            for (t, attr) in atom.terms.iter_mut().zip(&rs.attributes) {
                match t {
                    Term::Var(v) => match kinds.get(v.as_str()) {
                        Some(&k) if k != attr.kind => {
                            return Err(QueryError::Kind(format!(
                                "variable `{v}` used as both {k} and {} (`{}.{}`)",
                                attr.kind, rs.name, attr.name
                            )))
                        }
                        Some(_) => {}
                        None => {
                            kinds.insert(v.clone(), attr.kind);
                        }
                    },
                    Term::Const(c) => {
                        let coerced = c.coerce_to(attr.kind).ok_or_else(|| {
                            QueryError::Kind(format!(
                                "constant {c:?} does not fit {} column `{}.{}`",
                                attr.kind, rs.name, attr.name
                            ))
                        })?;
                        *c = coerced;
                    }
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        for h in &self.head {
            if !seen.insert(h.as_str()) {
                return Err(QueryError::DuplicateHead(h.clone()));
            }
            if !kinds.contains_key(h) {
                return Err(QueryError::Unsafe(h.clone()));
            }
        }
        for b in &self.builtins {
            let side_kind = |t: &Term| -> Result<ValueKind, QueryError> {
                match t {
                    Term::Var(v) => kinds
                        .get(v)
                        .copied()
                        .ok_or_else(|| QueryError::UnboundBuiltinVar(v.clone())),
                    Term::Const(c) => Ok(c.kind()),
                }
            };
            let l = side_kind(&b.lhs)?;
            let r = side_kind(&b.rhs)?;
            if !l.comparable_with(r) {
                return Err(QueryError::Kind(format!("cannot compare {l} with {r} in `{b}`")));
            }
        }
        Ok(())
    }

    /// Replace each head variable by the matching constant of `answer`,
    /// producing a boolean query.
    pub fn substitute(&self, answer: &[Value]) -> Result<ConjunctiveQuery, QueryError> {
        if answer.len() != self.head.len() {
            return Err(QueryError::HeadArity {
                expected: self.head.len(),
                found: answer.len(),
            });
        }
        let map: HashMap<&str, &Value> = self.head.iter().map(|h| h.as_str()).zip(answer.iter()).collect();
        let sub = |t: &Term| -> Term {
            match t {
                Term::Var(v) => match map.get(v.as_str()) {
                    Some(c) => Term::Const((*c).clone()),
                    None => t.clone(),
                },
                Term::Const(_) => t.clone(),
            }
        };
        Ok(ConjunctiveQuery {
            head: Vec::new(),
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    relation: a.relation,
                    name: a.name.clone(),
                    terms: a.terms.iter().map(sub).collect(),
                })
                .collect(),
            builtins: self
                .builtins
                .iter()
                .map(|b| Builtin {
                    op: b.op,
                    lhs: sub(&b.lhs),
                    rhs: sub(&b.rhs),
                })
                .collect(),
        })
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q({}) :- ", self.head.join(", "))?;
        let mut first = true;
        for a in &self.atoms {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{a}")?;
        }
        for b in &self.builtins {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// A union of conjunctive queries with a common head arity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnionQuery {
    pub disjuncts: Vec<ConjunctiveQuery>,
}

impl UnionQuery {
    pub fn single(q: ConjunctiveQuery) -> Self {
        UnionQuery { disjuncts: vec![q] }
    }

    pub fn arity(&self) -> usize {
        self.disjuncts.first().map_or(0, |q| q.arity())
    }

    pub fn is_boolean(&self) -> bool {
        self.arity() == 0
    }

    /// Largest number of relational atoms in any disjunct.
    pub fn max_atoms(&self) -> usize {
        self.disjuncts.iter().map(|q| q.atoms.len()).max().unwrap_or(0)
    }

    pub fn validate(&mut self, schema: &Schema) -> Result<(), QueryError> {
        if self.disjuncts.is_empty() {
            return Err(QueryError::Empty);
        }
        let k = self.disjuncts[0].arity();
        for q in &mut self.disjuncts {
            if q.arity() != k {
                return Err(QueryError::HeadArity {
                    expected: k,
                    found: q.arity(),
                });
            }
            q.validate(schema)?;
        }
        Ok(())
    }
}

impl fmt::Display for UnionQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, q) in self.disjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(" ; ")?;
            }
            write!(f, "{q}")?;
        }
        Ok(())
    }
}

/// `!( atoms, builtins )`: no set of facts may match the body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenialConstraint {
    pub body: ConjunctiveQuery,
}

impl DenialConstraint {
    pub fn width(&self) -> usize {
        self.body.atoms.len()
    }
}

impl fmt::Display for DenialConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("!(")?;
        let parts: Vec<String> = self
            .body
            .atoms
            .iter()
            .map(|a| a.to_string())
            .chain(self.body.builtins.iter().map(|b| b.to_string()))
            .collect();
        f.write_str(&parts.join(", "))?;
        f.write_str(")")
    }
}

/// Expand the key declared for `rel` into one denial constraint per non-key
/// attribute: two facts agreeing on the key may not differ there.
pub fn key_denials(schema: &Schema, rel: RelId) -> Vec<DenialConstraint> {
    let rs = schema.relation(rel);
    if !rs.has_key() {
        return Vec::new();
    }
    fd_denials(schema, rel, &rs.key, &rs.non_key_positions().collect::<Vec<_>>())
}

/// Denials for the functional dependency `lhs -> rhs` on `rel`.
pub fn fd_denials(schema: &Schema, rel: RelId, lhs: &[usize], rhs: &[usize]) -> Vec<DenialConstraint> {
    let rs = schema.relation(rel);
    let mut out = Vec::new();
    for &target in rhs {
        if lhs.contains(&target) {
            continue;
        }
        let left: Vec<Term> = (0..rs.arity())
            .map(|p| {
                if lhs.contains(&p) {
                    Term::Var(format!("k{}", p + 1))
                } else {
                    Term::Var(format!("a{}", p + 1))
                }
            })
            .collect();
        let right: Vec<Term> = (0..rs.arity())
            .map(|p| {
                if lhs.contains(&p) {
                    Term::Var(format!("k{}", p + 1))
                } else {
                    Term::Var(format!("b{}", p + 1))
                }
            })
            .collect();
        out.push(DenialConstraint {
            body: ConjunctiveQuery {
                head: Vec::new(),
                atoms: vec![
                    Atom {
                        relation: rel,
                        name: rs.name.clone(),
                        terms: left,
                    },
                    Atom {
                        relation: rel,
                        name: rs.name.clone(),
                        terms: right,
                    },
                ],
                builtins: vec![Builtin {
                    op: CmpOp::Ne,
                    lhs: Term::Var(format!("a{}", target + 1)),
                    rhs: Term::Var(format!("b{}", target + 1)),
                }],
            },
        });
    }
    out
}

/// Denials for every key declared in the schema.
pub fn schema_key_denials(schema: &Schema) -> Vec<DenialConstraint> {
    schema.ids().flat_map(|r| key_denials(schema, r)).collect()
}
