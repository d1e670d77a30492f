//! Conjunctive queries, unions of them, denial constraints, and their
//! evaluation over an [`Instance`](crate::instance::Instance).

mod ast;
mod eval;
mod parse;

pub use ast::*;
pub use eval::{evaluate, evaluate_union, for_each_match, Witness};
pub use parse::{parse_constraints, parse_query};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("syntax error at offset {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown relation `{name}` at offset {pos}")]
    UnknownRelation { name: String, pos: usize },
    #[error("`{relation}` expects {expected} terms, found {found}")]
    Arity {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("head variable `{0}` does not occur in any relational atom")]
    Unsafe(String),
    #[error("head variable `{0}` is repeated")]
    DuplicateHead(String),
    #[error("variable `{0}` in a comparison does not occur in any relational atom")]
    UnboundBuiltinVar(String),
    #[error("kind mismatch: {0}")]
    Kind(String),
    #[error("head arity mismatch: expected {expected}, found {found}")]
    HeadArity { expected: usize, found: usize },
    #[error("query has no disjuncts")]
    Empty,
}

impl QueryError {
    pub(crate) fn shifted(self, by: usize) -> Self {
        match self {
            QueryError::Syntax { pos, message } => QueryError::Syntax {
                pos: pos + by,
                message,
            },
            QueryError::UnknownRelation { name, pos } => QueryError::UnknownRelation { name, pos: pos + by },
            other => other,
        }
    }
}
