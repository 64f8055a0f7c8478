//! A SPARQL subset: PREFIX declarations, SELECT with an explicit
//! projection, basic graph patterns with `;`/`,` abbreviations, UNION
//! between two groups, and FILTER comparisons.

mod eval;
mod parse;

use std::fmt;

use thiserror::Error;

use crate::model::{serialize_term, PrefixMap, Term};
use crate::store::{Binding, TriplePattern};
use crate::xml::Position;

pub use eval::{eval_filter, evaluate};
pub use parse::parse_query;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("{position}: {message}")]
    Syntax { position: Position, message: String },
    #[error("{position}: unknown prefix '{prefix}'")]
    UnknownPrefix { position: Position, prefix: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectQuery {
    pub prefixes: PrefixMap,
    pub projection: Vec<String>,
    pub pattern: GroupPattern,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroupPattern {
    pub elements: Vec<GroupElement>,
}

impl GroupPattern {
    /// Variables that occur at a binding site (a triple pattern) anywhere
    /// in the group, union branches included.
    pub fn binding_variables(&self) -> Vec<String> {
        let mut vars = Vec::new();
        self.collect_binding_variables(&mut vars);
        vars
    }

    fn collect_binding_variables(&self, out: &mut Vec<String>) {
        for element in &self.elements {
            match element {
                GroupElement::Pattern(p) => {
                    out.extend(p.variables().map(str::to_string));
                }
                GroupElement::Union(l, r) => {
                    l.collect_binding_variables(out);
                    r.collect_binding_variables(out);
                }
                GroupElement::Filter(_) => {}
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupElement {
    Pattern(TriplePattern),
    Union(GroupPattern, GroupPattern),
    Filter(FilterExpr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Less,
    Greater,
    LessOrEqual,
    GreaterOrEqual,
    Equal,
    NotEqual,
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CompareOp::Less => "<",
            CompareOp::Greater => ">",
            CompareOp::LessOrEqual => "<=",
            CompareOp::GreaterOrEqual => ">=",
            CompareOp::Equal => "=",
            CompareOp::NotEqual => "!=",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Var(String),
    Term(Term),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterExpr {
    pub op: CompareOp,
    pub lhs: Operand,
    pub rhs: Operand,
}

impl FilterExpr {
    pub fn variables(&self) -> impl Iterator<Item = &str> {
        [&self.lhs, &self.rhs].into_iter().filter_map(|o| match o {
            Operand::Var(v) => Some(v.as_str()),
            Operand::Term(_) => None,
        })
    }
}

/// An ordered bag of solutions restricted to the projection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionSequence {
    pub variables: Vec<String>,
    pub rows: Vec<Binding>,
}

impl SolutionSequence {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Header row of variable names, one row per solution, terms in
    /// N-Triples syntax, absent bindings as empty cells.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.variables.iter().map(|v| format!("?{}", v)).collect();
        out.push_str(&header.join("\t"));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = self
                .variables
                .iter()
                .map(|v| row.get(v).map(serialize_term).unwrap_or_default())
                .collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }
}
