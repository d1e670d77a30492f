//! Text grammar for queries and constraints.
//!
//! ```text
//! union      := rule (';' rule)* [';' | '.']
//! rule       := IDENT '(' [VAR (',' VAR)*] ')' ':-' literal (',' literal)*
//! literal    := IDENT '(' term (',' term)* ')' | term OP term
//! term       := VAR | 'text' | "text" | NUMBER
//! OP         := = | != | <> | < | > | <= | >= | ≠ | ≤ | ≥
//!
//! constraint := '!(' literal (',' literal)* ')' | ':-' literal (',' literal)*
//!             | IDENT ':' ATTR (',' ATTR)* '->' ATTR (',' ATTR)*
//! ```
//!
//! Identifiers may carry trailing primes (`z'`). A quote that does not
//! directly follow an identifier starts a text constant; `''` inside a
//! constant is an escaped quote. `#` starts a comment running to the end of
//! the line. Constraints are one per line.

use crate::schema::Schema;
use crate::value::Value;

use super::ast::*;
use super::QueryError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Text(String),
    Number(String),
    LParen,
    RParen,
    Comma,
    Semi,
    Dot,
    Colon,
    Turnstile,
    Bang,
    Arrow,
    Op(CmpOp),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    pos: usize,
}

fn syntax(pos: usize, message: impl Into<String>) -> QueryError {
    QueryError::Syntax {
        pos,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<Spanned>, QueryError> {
    let bytes: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let peek = |j: usize| bytes.get(j).map(|&(_, c)| c);
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            while i < bytes.len() && bytes[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        let single = |t: Tok| Spanned { tok: t, pos };
        match c {
            '(' => {
                out.push(single(Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push(single(Tok::RParen));
                i += 1;
            }
            ',' => {
                out.push(single(Tok::Comma));
                i += 1;
            }
            ';' => {
                out.push(single(Tok::Semi));
                i += 1;
            }
            '.' if !peek(i + 1).is_some_and(|d| d.is_ascii_digit()) => {
                out.push(single(Tok::Dot));
                i += 1;
            }
            ':' => {
                if peek(i + 1) == Some('-') {
                    out.push(single(Tok::Turnstile));
                    i += 2;
                } else {
                    out.push(single(Tok::Colon));
                    i += 1;
                }
            }
            '!' => {
                if peek(i + 1) == Some('=') {
                    out.push(single(Tok::Op(CmpOp::Ne)));
                    i += 2;
                } else {
                    out.push(single(Tok::Bang));
                    i += 1;
                }
            }
            '=' => {
                out.push(single(Tok::Op(CmpOp::Eq)));
                i += if peek(i + 1) == Some('=') { 2 } else { 1 };
            }
            '<' => match peek(i + 1) {
                Some('=') => {
                    out.push(single(Tok::Op(CmpOp::Le)));
                    i += 2;
                }
                Some('>') => {
                    out.push(single(Tok::Op(CmpOp::Ne)));
                    i += 2;
                }
                _ => {
                    out.push(single(Tok::Op(CmpOp::Lt)));
                    i += 1;
                }
            },
            '>' => {
                if peek(i + 1) == Some('=') {
                    out.push(single(Tok::Op(CmpOp::Ge)));
                    i += 2;
                } else {
                    out.push(single(Tok::Op(CmpOp::Gt)));
                    i += 1;
                }
            }
            '≠' => {
                out.push(single(Tok::Op(CmpOp::Ne)));
                i += 1;
            }
            '≤' => {
                out.push(single(Tok::Op(CmpOp::Le)));
                i += 1;
            }
            '≥' => {
                out.push(single(Tok::Op(CmpOp::Ge)));
                i += 1;
            }
            '→' => {
                out.push(single(Tok::Arrow));
                i += 1;
            }
            '-' if peek(i + 1) == Some('>') => {
                out.push(single(Tok::Arrow));
                i += 2;
            }
            '\'' | '"' => {
                let quote = c;
                let mut s = String::new();
                i += 1;
                loop {
                    match peek(i) {
                        None => return Err(syntax(pos, "unterminated text constant")),
                        Some(q) if q == quote => {
                            if peek(i + 1) == Some(quote) {
                                s.push(quote);
                                i += 2;
                            } else {
                                i += 1;
                                break;
                            }
                        }
                        Some(ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push(single(Tok::Text(s)));
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let start = i;
                i += 1;
                while let Some(d) = peek(i) {
                    if d.is_ascii_digit() || d == '.' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let end = bytes.get(i).map_or(src.len(), |&(p, _)| p);
                let lit = &src[bytes[start].0..end];
                if !lit.chars().any(|d| d.is_ascii_digit()) {
                    return Err(syntax(pos, format!("unexpected `{lit}`")));
                }
                out.push(single(Tok::Number(lit.to_string())));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while let Some(d) = peek(i) {
                    if d.is_alphanumeric() || d == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                while peek(i) == Some('\'') {
                    i += 1;
                }
                let end = bytes.get(i).map_or(src.len(), |&(p, _)| p);
                out.push(single(Tok::Ident(src[bytes[start].0..end].to_string())));
            }
            other => return Err(syntax(pos, format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    at: usize,
    end: usize,
    schema: &'a Schema,
}

impl<'a> Parser<'a> {
    fn new(src: &str, schema: &'a Schema) -> Result<Self, QueryError> {
        Ok(Parser {
            toks: lex(src)?,
            at: 0,
            end: src.len(),
            schema,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|s| &s.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.at + 1).map(|s| &s.tok)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |s| s.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|s| s.tok.clone());
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), QueryError> {
        let pos = self.pos();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(syntax(pos, format!("expected {what}, found {t:?}"))),
            None => Err(syntax(pos, format!("expected {what}, found end of input"))),
        }
    }

    fn at_end(&self) -> bool {
        self.at >= self.toks.len()
    }

    fn term(&mut self) -> Result<Term, QueryError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Ident(v)) => Ok(Term::Var(v)),
            Some(Tok::Text(s)) => Ok(Term::Const(Value::text(s))),
            Some(Tok::Number(n)) => parse_number(&n)
                .map(Term::Const)
                .ok_or_else(|| syntax(pos, format!("invalid number `{n}`"))),
            Some(t) => Err(syntax(pos, format!("expected a term, found {t:?}"))),
            None => Err(syntax(pos, "expected a term, found end of input")),
        }
    }

    fn literal(&mut self, atoms: &mut Vec<Atom>, builtins: &mut Vec<Builtin>) -> Result<(), QueryError> {
        if let (Some(Tok::Ident(name)), Some(Tok::LParen)) = (self.peek(), self.peek2()) {
            let name = name.clone();
            let pos = self.pos();
            self.at += 2;
            let relation = self
                .schema
                .lookup(&name)
                .ok_or_else(|| QueryError::UnknownRelation {
                    name: name.clone(),
                    pos,
                })?;
            let mut terms = vec![self.term()?];
            while self.peek() == Some(&Tok::Comma) {
                self.at += 1;
                terms.push(self.term()?);
            }
            self.expect(Tok::RParen, "`)`")?;
            atoms.push(Atom {
                relation,
                name,
                terms,
            });
            return Ok(());
        }
        let lhs = self.term()?;
        let pos = self.pos();
        let op = match self.bump() {
            Some(Tok::Op(op)) => op,
            _ => return Err(syntax(pos, "expected a comparison operator")),
        };
        let rhs = self.term()?;
        builtins.push(Builtin { op, lhs, rhs });
        Ok(())
    }

    fn body(&mut self, stop: &[Tok]) -> Result<(Vec<Atom>, Vec<Builtin>), QueryError> {
        let mut atoms = Vec::new();
        let mut builtins = Vec::new();
        self.literal(&mut atoms, &mut builtins)?;
        while self.peek() == Some(&Tok::Comma) {
            self.at += 1;
            self.literal(&mut atoms, &mut builtins)?;
        }
        if let Some(t) = self.peek() {
            if !stop.contains(t) {
                return Err(syntax(self.pos(), format!("unexpected {t:?}")));
            }
        }
        if atoms.is_empty() {
            return Err(syntax(self.pos(), "body has no relational atom"));
        }
        Ok((atoms, builtins))
    }

    fn rule(&mut self) -> Result<ConjunctiveQuery, QueryError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Ident(_)) => {}
            _ => return Err(syntax(pos, "expected a query head like `q(x)`")),
        }
        self.expect(Tok::LParen, "`(`")?;
        let mut head = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                let pos = self.pos();
                match self.bump() {
                    Some(Tok::Ident(v)) => head.push(v),
                    _ => return Err(syntax(pos, "head terms must be variables")),
                }
                if self.peek() == Some(&Tok::Comma) {
                    self.at += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::Turnstile, "`:-`")?;
        let (atoms, builtins) = self.body(&[Tok::Semi, Tok::Dot])?;
        Ok(ConjunctiveQuery {
            head,
            atoms,
            builtins,
        })
    }
}

fn parse_number(n: &str) -> Option<Value> {
    if n.contains('.') {
        n.parse::<f64>()
            .ok()
            .filter(|f| f.is_finite())
            .map(Value::Decimal)
    } else {
        n.parse::<i64>().ok().map(Value::Integer)
    }
}

/// Parse and validate a union of conjunctive queries.
pub fn parse_query(text: &str, schema: &Schema) -> Result<UnionQuery, QueryError> {
    let mut p = Parser::new(text, schema)?;
    let mut disjuncts = vec![p.rule()?];
    loop {
        match p.peek() {
            None => break,
            Some(Tok::Semi) | Some(Tok::Dot) => {
                p.at += 1;
                if p.at_end() {
                    break;
                }
                disjuncts.push(p.rule()?);
            }
            Some(t) => return Err(syntax(p.pos(), format!("unexpected {t:?}"))),
        }
    }
    let mut q = UnionQuery { disjuncts };
    q.validate(schema)?;
    Ok(q)
}

/// Parse one constraint per line. Keys declared in the schema are not
/// included; see [`super::ast::schema_key_denials`].
pub fn parse_constraints(text: &str, schema: &Schema) -> Result<Vec<DenialConstraint>, QueryError> {
    let mut out = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let line_start = offset;
        offset += line.len();
        let mut p = Parser::new(line, schema).map_err(|e| e.shifted(line_start))?;
        if p.at_end() {
            continue;
        }
        let parsed = parse_constraint_line(&mut p).map_err(|e| e.shifted(line_start))?;
        out.extend(parsed);
    }
    Ok(out)
}

fn parse_constraint_line(p: &mut Parser<'_>) -> Result<Vec<DenialConstraint>, QueryError> {
    match (p.peek().cloned(), p.peek2().cloned()) {
        (Some(Tok::Bang), _) => {
            p.at += 1;
            p.expect(Tok::LParen, "`(`")?;
            let (atoms, builtins) = p.body(&[Tok::RParen])?;
            p.expect(Tok::RParen, "`)`")?;
            finish_line(p)?;
            denial(p.schema, atoms, builtins).map(|d| vec![d])
        }
        (Some(Tok::Turnstile), _) => {
            p.at += 1;
            let (atoms, builtins) = p.body(&[Tok::Dot])?;
            finish_line(p)?;
            denial(p.schema, atoms, builtins).map(|d| vec![d])
        }
        (Some(Tok::Ident(rel)), Some(Tok::Colon)) => {
            let pos = p.pos();
            p.at += 2;
            let rid = p.schema.lookup(&rel).ok_or_else(|| QueryError::UnknownRelation {
                name: rel.clone(),
                pos,
            })?;
            let lhs = attr_list(p, rid)?;
            p.expect(Tok::Arrow, "`->`")?;
            let rhs = attr_list(p, rid)?;
            finish_line(p)?;
            Ok(fd_denials(p.schema, rid, &lhs, &rhs))
        }
        _ => Err(syntax(p.pos(), "expected `!(...)`, `:- ...` or `R: A -> B`")),
    }
}

fn attr_list(p: &mut Parser<'_>, rel: crate::schema::RelId) -> Result<Vec<usize>, QueryError> {
    let rs = p.schema.relation(rel);
    let mut out = Vec::new();
    loop {
        let pos = p.pos();
        match p.bump() {
            Some(Tok::Ident(a)) => {
                let idx = rs
                    .position_of(&a)
                    .ok_or_else(|| syntax(pos, format!("`{}` has no attribute `{a}`", rs.name)))?;
                out.push(idx);
            }
            _ => return Err(syntax(pos, "expected an attribute name")),
        }
        if p.peek() == Some(&Tok::Comma) {
            p.at += 1;
        } else {
            return Ok(out);
        }
    }
}

fn finish_line(p: &mut Parser<'_>) -> Result<(), QueryError> {
    if matches!(p.peek(), Some(Tok::Dot) | Some(Tok::Semi)) {
        p.at += 1;
    }
    if !p.at_end() {
        return Err(syntax(p.pos(), "trailing input after constraint"));
    }
    Ok(())
}

fn denial(schema: &Schema, atoms: Vec<Atom>, builtins: Vec<Builtin>) -> Result<DenialConstraint, QueryError> {
    let mut body = ConjunctiveQuery {
        head: Vec::new(),
        atoms,
        builtins,
    };
    body.validate(schema)?;
    Ok(DenialConstraint { body })
}
