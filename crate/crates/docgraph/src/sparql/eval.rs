//! Query evaluation: left-to-right nested-loop joins over index-backed
//! matches, bag semantics.

use std::collections::BTreeSet;

use crate::model::compare_terms;
use crate::sparql::{
    CompareOp, FilterExpr, GroupElement, GroupPattern, Operand, SelectQuery, SolutionSequence,
};
use crate::store::{Binding, Dataset, PatternTerm, TriplePattern};

/// Evaluates a parsed query against a dataset snapshot.
///
/// Group elements run left to right; each triple pattern is joined
/// against the accumulated bindings, a UNION evaluates both branches
/// against the accumulated bindings and concatenates, and a FILTER drops
/// bindings whose expression is not true. A filter is applied once every
/// variable it mentions could have been bound by the elements seen so
/// far; filters over never-bound variables run last and eliminate all
/// solutions, consistent with the unbound rule.
pub fn evaluate(query: &SelectQuery, dataset: &Dataset) -> SolutionSequence {
    let rows = eval_group(&query.pattern, vec![Binding::new()], dataset);
    SolutionSequence {
        variables: query.projection.clone(),
        rows: rows.iter().map(|b| b.project(&query.projection)).collect(),
    }
}

fn eval_group(group: &GroupPattern, input: Vec<Binding>, dataset: &Dataset) -> Vec<Binding> {
    let mut scope: BTreeSet<String> = input
        .iter()
        .flat_map(|b| b.variables().map(str::to_string))
        .collect();
    let mut acc = input;
    let mut pending: Vec<&FilterExpr> = Vec::new();

    for element in &group.elements {
        match element {
            GroupElement::Pattern(pattern) => {
                acc = join_pattern(acc, pattern, dataset);
                scope.extend(pattern.variables().map(str::to_string));
            }
            GroupElement::Union(left, right) => {
                let left_rows = eval_group(left, acc.clone(), dataset);
                let mut right_rows = eval_group(right, acc, dataset);
                acc = left_rows;
                acc.append(&mut right_rows);
                scope.extend(left.binding_variables());
                scope.extend(right.binding_variables());
            }
            GroupElement::Filter(expr) => pending.push(expr),
        }
        pending.retain(|expr| {
            if expr.variables().all(|v| scope.contains(v)) {
                acc.retain(|b| eval_filter(expr, b));
                false
            } else {
                true
            }
        });
    }
    for expr in pending {
        acc.retain(|b| eval_filter(expr, b));
    }
    acc
}

fn join_pattern(acc: Vec<Binding>, pattern: &TriplePattern, dataset: &Dataset) -> Vec<Binding> {
    let mut out = Vec::new();
    for binding in acc {
        let grounded = substitute(pattern, &binding);
        for found in dataset.match_pattern(&grounded) {
            let mut merged = binding.clone();
            let consistent = found.iter().all(|(var, term)| merged.bind(var, term));
            if consistent {
                out.push(merged);
            }
        }
    }
    out
}

fn substitute(pattern: &TriplePattern, binding: &Binding) -> TriplePattern {
    let subst = |p: &PatternTerm| match p {
        PatternTerm::Var(v) => match binding.get(v) {
            Some(term) => PatternTerm::Term(term.clone()),
            None => p.clone(),
        },
        PatternTerm::Term(_) => p.clone(),
    };
    TriplePattern {
        subject: subst(&pattern.subject),
        predicate: subst(&pattern.predicate),
        object: subst(&pattern.object),
    }
}

/// True iff the comparison holds under the binding. References to
/// unbound variables and incomparable term pairs are not true. `=` and
/// `!=` use structural identity for every term kind; the orderings use
/// the typed-literal comparison.
pub fn eval_filter(expr: &FilterExpr, binding: &Binding) -> bool {
    let resolve = |operand: &Operand| match operand {
        Operand::Var(v) => binding.get(v).cloned(),
        Operand::Term(t) => Some(t.clone()),
    };
    let (Some(lhs), Some(rhs)) = (resolve(&expr.lhs), resolve(&expr.rhs)) else {
        return false;
    };
    match expr.op {
        CompareOp::Equal => lhs == rhs,
        CompareOp::NotEqual => lhs != rhs,
        ordering_op => match compare_terms(&lhs, &rhs) {
            None => false,
            Some(ord) => match ordering_op {
                CompareOp::Less => ord.is_lt(),
                CompareOp::Greater => ord.is_gt(),
                CompareOp::LessOrEqual => ord.is_le(),
                CompareOp::GreaterOrEqual => ord.is_ge(),
                CompareOp::Equal | CompareOp::NotEqual => unreachable!(),
            },
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Iri, Literal, Term, Triple};
    use crate::sparql::parse_query;

    fn iri(s: &str) -> Iri {
        Iri::raw(s)
    }

    fn dataset(triples: &[(&str, &str, Term)]) -> Dataset {
        let mut ds = Dataset::new();
        let src = iri("http://ex.org/doc");
        for (s, p, o) in triples {
            ds.insert(&src, Triple::new(iri(s), iri(p), o.clone()));
        }
        ds
    }

    #[test]
    fn any_query_on_empty_dataset_is_empty() {
        let q = parse_query("SELECT ?s WHERE { ?s ?p ?o }").unwrap();
        let result = evaluate(&q, &Dataset::new());
        assert!(result.is_empty());
    }

    #[test]
    fn scan_query_counts_triples() {
        let ds = dataset(&[
            ("http://ex.org/a", "http://ex.org/p", Term::Iri(iri("http://ex.org/x"))),
            ("http://ex.org/b", "http://ex.org/p", Term::Iri(iri("http://ex.org/y"))),
            ("http://ex.org/c", "http://ex.org/q", Term::Literal(Literal::string("v"))),
        ]);
        let q = parse_query("SELECT ?s WHERE { ?s ?p ?o }").unwrap();
        assert_eq!(evaluate(&q, &ds).len(), 3);
    }

    #[test]
    fn join_shares_variables() {
        let ds = dataset(&[
            ("http://ex.org/a", "http://ex.org/p", Term::Iri(iri("http://ex.org/b"))),
            ("http://ex.org/b", "http://ex.org/q", Term::Literal(Literal::string("v"))),
        ]);
        let q = parse_query(
            "SELECT ?v WHERE { ?a <http://ex.org/p> ?b . ?b <http://ex.org/q> ?v }",
        )
        .unwrap();
        let result = evaluate(&q, &ds);
        assert_eq!(result.len(), 1);
        assert_eq!(
            result.rows[0].get("v"),
            Some(&Term::Literal(Literal::string("v")))
        );
    }

    #[test]
    fn union_concatenates_bags() {
        let ds = dataset(&[
            ("http://ex.org/a", "http://ex.org/p", Term::Iri(iri("http://ex.org/x"))),
            ("http://ex.org/a", "http://ex.org/q", Term::Iri(iri("http://ex.org/x"))),
        ]);
        let q = parse_query(
            "SELECT ?s WHERE { { ?s <http://ex.org/p> ?o } UNION { ?s <http://ex.org/q> ?o } }",
        )
        .unwrap();
        // the same solution arises once per branch: a bag, not a set
        assert_eq!(evaluate(&q, &ds).len(), 2);
    }

    #[test]
    fn filter_date_comparison() {
        let mut binding = Binding::new();
        binding.set("d", Term::Literal(Literal::date("2009-06-01")));
        let expr = FilterExpr {
            op: CompareOp::Greater,
            lhs: Operand::Var("d".into()),
            rhs: Operand::Term(Term::Literal(Literal::date("2009-01-01"))),
        };
        assert!(eval_filter(&expr, &binding));
    }

    #[test]
    fn filter_unbound_variable_is_not_true() {
        let expr = FilterExpr {
            op: CompareOp::Greater,
            lhs: Operand::Var("missing".into()),
            rhs: Operand::Term(Term::Literal(Literal::date("2009-01-01"))),
        };
        assert!(!eval_filter(&expr, &Binding::new()));
    }

    #[test]
    fn filter_incomparable_is_not_true() {
        let mut binding = Binding::new();
        binding.set("d", Term::Iri(iri("http://ex.org/doc")));
        let expr = FilterExpr {
            op: CompareOp::Greater,
            lhs: Operand::Var("d".into()),
            rhs: Operand::Term(Term::Literal(Literal::date("2009-01-01"))),
        };
        assert!(!eval_filter(&expr, &binding));
        // but structural (in)equality is defined for every pairing
        let neq = FilterExpr {
            op: CompareOp::NotEqual,
            lhs: Operand::Var("d".into()),
            rhs: Operand::Term(Term::Literal(Literal::date("2009-01-01"))),
        };
        assert!(eval_filter(&neq, &binding));
    }

    #[test]
    fn filter_before_binding_pattern_is_deferred() {
        let ds = dataset(&[
            ("http://ex.org/a", "http://ex.org/p", Term::Literal(Literal::integer("7"))),
            ("http://ex.org/b", "http://ex.org/p", Term::Literal(Literal::integer("3"))),
        ]);
        let q = parse_query(
            "SELECT ?s WHERE { FILTER (?o > \"5\"^^xsd:integer) ?s <http://ex.org/p> ?o }",
        )
        .unwrap();
        assert_eq!(evaluate(&q, &ds).len(), 1);
    }

    #[test]
    fn filter_on_never_bound_variable_eliminates_all() {
        let ds = dataset(&[(
            "http://ex.org/a",
            "http://ex.org/p",
            Term::Literal(Literal::integer("7")),
        )]);
        let q = parse_query(
            "SELECT ?s WHERE { ?s <http://ex.org/p> ?o FILTER (?nothere > \"5\"^^xsd:integer) }",
        )
        .unwrap();
        assert!(evaluate(&q, &ds).is_empty());
    }

    #[test]
    fn projection_restricts_and_permits_absence() {
        let ds = dataset(&[
            ("http://ex.org/a", "http://ex.org/p", Term::Iri(iri("http://ex.org/x"))),
        ]);
        let q = parse_query(
            "SELECT ?s ?w WHERE { { ?s <http://ex.org/p> ?o } UNION { ?s <http://ex.org/q> ?w } }",
        )
        .unwrap();
        let result = evaluate(&q, &ds);
        assert_eq!(result.len(), 1);
        assert_eq!(result.rows[0].get("w"), None);
        assert_eq!(result.to_tsv(), "?s\t?w\n<http://ex.org/a>\t\n");
    }
}
