//! Indexed triple dataset: per-document named graphs plus a merged view.
//!
//! The merged view is maintained in three sorted index orderings (SPO,
//! POS, OSP) so that pattern matching can range-scan on whichever
//! positions are ground. Readers take `&Dataset` and writers `&mut
//! Dataset`, so a match always runs against a stable snapshot.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{parse_term, BlankNode, Iri, Subject, Term, Triple};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct NtParseError {
    pub line: usize,
    pub message: String,
}

/// A set of triples; duplicates collapse.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Graph {
    triples: BTreeSet<Triple>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, t: Triple) -> bool {
        self.triples.insert(t)
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.triples.contains(t)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }
}

/// One position of a triple pattern: a ground term or a named variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternTerm {
    Term(Term),
    Var(String),
}

impl PatternTerm {
    pub fn var(name: impl Into<String>) -> Self {
        PatternTerm::Var(name.into())
    }

    fn as_var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }
}

impl From<Term> for PatternTerm {
    fn from(t: Term) -> Self {
        PatternTerm::Term(t)
    }
}

impl From<Iri> for PatternTerm {
    fn from(iri: Iri) -> Self {
        PatternTerm::Term(Term::Iri(iri))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(
        subject: impl Into<PatternTerm>,
        predicate: impl Into<PatternTerm>,
        object: impl Into<PatternTerm>,
    ) -> Self {
        TriplePattern {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        [&self.subject, &self.predicate, &self.object]
            .into_iter()
            .filter_map(|p| p.as_var())
    }
}

/// A solution mapping from variable names to terms.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Binding {
    map: BTreeMap<String, Term>,
}

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.map.get(var)
    }

    pub fn set(&mut self, var: impl Into<String>, term: Term) {
        self.map.insert(var.into(), term);
    }

    /// Binds `var` to `term`, failing on a conflicting existing binding.
    pub fn bind(&mut self, var: &str, term: &Term) -> bool {
        match self.map.get(var) {
            Some(existing) => existing == term,
            None => {
                self.map.insert(var.to_string(), term.clone());
                true
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Term)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }

    /// Restriction of this binding to the given variables; absent ones
    /// stay absent.
    pub fn project(&self, vars: &[String]) -> Binding {
        let mut out = Binding::new();
        for v in vars {
            if let Some(t) = self.map.get(v) {
                out.map.insert(v.clone(), t.clone());
            }
        }
        out
    }
}

type SpoIndex = BTreeMap<Subject, BTreeMap<Iri, BTreeSet<Term>>>;
type PosIndex = BTreeMap<Iri, BTreeMap<Term, BTreeSet<Subject>>>;
type OspIndex = BTreeMap<Term, BTreeMap<Subject, BTreeSet<Iri>>>;

/// Named graphs keyed by source document IRI, with indexed merged view.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    graphs: BTreeMap<Iri, Graph>,
    spo: SpoIndex,
    pos: PosIndex,
    osp: OspIndex,
    merged_len: usize,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.graphs == other.graphs
    }
}

impl Eq for Dataset {}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a triple into the named graph for `source`. Duplicate
    /// inserts are no-ops; the merged view keeps set semantics across
    /// graphs.
    pub fn insert(&mut self, source: &Iri, t: Triple) {
        let graph = self.graphs.entry(source.clone()).or_default();
        if !graph.insert(t.clone()) {
            return;
        }
        let newly_merged = self
            .spo
            .entry(t.subject.clone())
            .or_default()
            .entry(t.predicate.clone())
            .or_default()
            .insert(t.object.clone());
        if newly_merged {
            self.merged_len += 1;
            self.pos
                .entry(t.predicate.clone())
                .or_default()
                .entry(t.object.clone())
                .or_default()
                .insert(t.subject.clone());
            self.osp
                .entry(t.object)
                .or_default()
                .entry(t.subject)
                .or_default()
                .insert(t.predicate);
        }
    }

    /// Registers an (empty) named graph so provenance exists even for
    /// documents that yield no triples.
    pub fn ensure_graph(&mut self, source: &Iri) {
        self.graphs.entry(source.clone()).or_default();
    }

    pub fn graph(&self, source: &Iri) -> Option<&Graph> {
        self.graphs.get(source)
    }

    pub fn graph_names(&self) -> impl Iterator<Item = &Iri> {
        self.graphs.keys()
    }

    pub fn graphs(&self) -> impl Iterator<Item = (&Iri, &Graph)> {
        self.graphs.iter().map(|(k, v)| (k, v))
    }

    /// Number of distinct triples in the merged view.
    pub fn len(&self) -> usize {
        self.merged_len
    }

    pub fn is_empty(&self) -> bool {
        self.merged_len == 0
    }

    /// Merged view in SPO order.
    pub fn iter(&self) -> impl Iterator<Item = Triple> + '_ {
        self.spo.iter().flat_map(|(s, pm)| {
            pm.iter().flat_map(move |(p, os)| {
                os.iter()
                    .map(move |o| Triple::new(s.clone(), p.clone(), o.clone()))
            })
        })
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.spo
            .get(&t.subject)
            .and_then(|pm| pm.get(&t.predicate))
            .is_some_and(|os| os.contains(&t.object))
    }

    /// Sizes of the three index orderings (they must all equal `len`).
    pub fn index_sizes(&self) -> (usize, usize, usize) {
        let spo = self
            .spo
            .values()
            .flat_map(|m| m.values())
            .map(BTreeSet::len)
            .sum();
        let pos = self
            .pos
            .values()
            .flat_map(|m| m.values())
            .map(BTreeSet::len)
            .sum();
        let osp = self
            .osp
            .values()
            .flat_map(|m| m.values())
            .map(BTreeSet::len)
            .sum();
        (spo, pos, osp)
    }

    /// All matches of `p` against the merged view, one binding per
    /// unifying triple. Repeated variables must bind consistently. The
    /// scan uses the index whose leading positions are ground: SPO for a
    /// ground subject, POS for a ground predicate, OSP for a ground
    /// object, full scan otherwise.
    pub fn match_pattern(&self, p: &TriplePattern) -> Vec<Binding> {
        let mut out = Vec::new();
        let mut emit = |s: &Subject, pr: &Iri, o: &Term| {
            let mut b = Binding::new();
            let ok = match &p.subject {
                PatternTerm::Var(v) => b.bind(v, &Term::from(s.clone())),
                PatternTerm::Term(t) => t.as_subject().as_ref() == Some(s),
            } && match &p.predicate {
                PatternTerm::Var(v) => b.bind(v, &Term::Iri(pr.clone())),
                PatternTerm::Term(t) => matches!(t, Term::Iri(i) if i == pr),
            } && match &p.object {
                PatternTerm::Var(v) => b.bind(v, o),
                PatternTerm::Term(t) => t == o,
            };
            if ok {
                out.push(b);
            }
        };

        match (&p.subject, &p.predicate, &p.object) {
            (PatternTerm::Term(s), _, _) => {
                let Some(subject) = s.as_subject() else {
                    return out; // a literal can never be a subject
                };
                if let Some(pm) = self.spo.get(&subject) {
                    match &p.predicate {
                        PatternTerm::Term(Term::Iri(pr)) => {
                            if let Some(os) = pm.get(pr) {
                                for o in os {
                                    emit(&subject, pr, o);
                                }
                            }
                        }
                        PatternTerm::Term(_) => {}
                        PatternTerm::Var(_) => {
                            for (pr, os) in pm {
                                for o in os {
                                    emit(&subject, pr, o);
                                }
                            }
                        }
                    }
                }
            }
            (PatternTerm::Var(_), PatternTerm::Term(Term::Iri(pr)), _) => {
                if let Some(om) = self.pos.get(pr) {
                    match &p.object {
                        PatternTerm::Term(o) => {
                            if let Some(ss) = om.get(o) {
                                for s in ss {
                                    emit(s, pr, o);
                                }
                            }
                        }
                        PatternTerm::Var(_) => {
                            for (o, ss) in om {
                                for s in ss {
                                    emit(s, pr, o);
                                }
                            }
                        }
                    }
                }
            }
            (PatternTerm::Var(_), PatternTerm::Term(_), _) => {}
            (PatternTerm::Var(_), PatternTerm::Var(_), PatternTerm::Term(o)) => {
                if let Some(sm) = self.osp.get(o) {
                    for (s, prs) in sm {
                        for pr in prs {
                            emit(s, pr, o);
                        }
                    }
                }
            }
            (PatternTerm::Var(_), PatternTerm::Var(_), PatternTerm::Var(_)) => {
                for t in self.iter() {
                    emit(&t.subject, &t.predicate, &t.object);
                }
            }
        }
        out
    }

    /// Serializes the merged view as sorted N-Triples text: one
    /// `subject predicate object .` per line, LF endings, byte-exact
    /// deterministic.
    pub fn export_ntriples(&self) -> String {
        let mut lines: Vec<String> = self.iter().map(|t| t.to_string()).collect();
        lines.sort();
        let mut out = lines.join("\n");
        if !out.is_empty() {
            out.push('\n');
        }
        out
    }

    /// Serializes one named graph, sorted like `export_ntriples`.
    pub fn export_graph_ntriples(&self, source: &Iri) -> Option<String> {
        let graph = self.graphs.get(source)?;
        let mut lines: Vec<String> = graph.iter().map(|t| t.to_string()).collect();
        lines.sort();
        let mut out = lines.join("\n");
        if !out.is_empty() {
            out.push('\n');
        }
        Some(out)
    }

    /// Parses N-Triples text into a fresh dataset under one source graph.
    /// Blank node labels are preserved verbatim.
    pub fn import_ntriples(text: &str, source: &Iri) -> Result<Dataset, NtParseError> {
        let mut ds = Dataset::new();
        ds.ensure_graph(source);
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let triple = parse_ntriples_line(trimmed, line_no)?;
            ds.insert(source, triple);
        }
        Ok(ds)
    }

    /// Imports N-Triples into an existing dataset under a new source
    /// graph. Parsed blank node labels are prefixed with a per-graph tag
    /// so labels from different sources cannot collide.
    pub fn merge_ntriples(&mut self, text: &str, source: &Iri) -> Result<(), NtParseError> {
        let tag = format!("g{}", self.graphs.len() + 1);
        let parsed = Dataset::import_ntriples(text, source)?;
        for t in parsed.iter() {
            self.insert(source, relabel_blanks(t, &tag));
        }
        self.ensure_graph(source);
        Ok(())
    }
}

fn relabel_blanks(t: Triple, tag: &str) -> Triple {
    let relabel = |b: &BlankNode| BlankNode::new(format!("{}{}", tag, b.label())).unwrap();
    let subject = match &t.subject {
        Subject::Blank(b) => Subject::Blank(relabel(b)),
        s => s.clone(),
    };
    let object = match &t.object {
        Term::Blank(b) => Term::Blank(relabel(b)),
        o => o.clone(),
    };
    Triple::new(subject, t.predicate, object)
}

fn parse_ntriples_line(line: &str, line_no: usize) -> Result<Triple, NtParseError> {
    let err = |message: String| NtParseError {
        line: line_no,
        message,
    };
    let mut rest = line;
    let mut take_term = |what: &str| -> Result<Term, NtParseError> {
        rest = rest.trim_start();
        let (term, used) =
            parse_term(rest).map_err(|e| err(format!("bad {} term: {}", what, e)))?;
        rest = &rest[used..];
        Ok(term)
    };
    let subject_term = take_term("subject")?;
    let predicate_term = take_term("predicate")?;
    let object = take_term("object")?;
    let tail = rest.trim();
    if tail != "." {
        return Err(err("expected terminal '.'".into()));
    }
    let subject = subject_term
        .as_subject()
        .ok_or_else(|| err("literal in subject position".into()))?;
    let Term::Iri(predicate) = predicate_term else {
        return Err(err("predicate must be an IRI".into()));
    };
    Ok(Triple::new(subject, predicate, object))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Literal;

    fn iri(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    fn sample_triple(n: u32) -> Triple {
        Triple::new(
            iri(&format!("http://ex.org/s{}", n)),
            iri("http://ex.org/p"),
            Term::Iri(iri(&format!("http://ex.org/o{}", n))),
        )
    }

    #[test]
    fn insert_is_idempotent() {
        let mut ds = Dataset::new();
        let src = iri("http://ex.org/doc");
        ds.insert(&src, sample_triple(1));
        assert_eq!(ds.len(), 1);
        ds.insert(&src, sample_triple(1));
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.graph(&src).unwrap().len(), 1);
    }

    #[test]
    fn same_triple_under_two_sources_merges_once() {
        let mut ds = Dataset::new();
        ds.insert(&iri("http://ex.org/a"), sample_triple(1));
        ds.insert(&iri("http://ex.org/b"), sample_triple(1));
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.graphs().count(), 2);
        assert_eq!(ds.graph(&iri("http://ex.org/a")).unwrap().len(), 1);
        assert_eq!(ds.graph(&iri("http://ex.org/b")).unwrap().len(), 1);
        assert_eq!(ds.index_sizes(), (1, 1, 1));
    }

    #[test]
    fn ground_pattern_yields_one_empty_binding() {
        let mut ds = Dataset::new();
        ds.insert(&iri("http://ex.org/doc"), sample_triple(1));
        let t = sample_triple(1);
        let p = TriplePattern::new(
            Term::from(t.subject.clone()),
            t.predicate.clone(),
            t.object.clone(),
        );
        let bindings = ds.match_pattern(&p);
        assert_eq!(bindings.len(), 1);
        assert!(bindings[0].is_empty());
    }

    #[test]
    fn repeated_variables_bind_consistently() {
        let mut ds = Dataset::new();
        let src = iri("http://ex.org/doc");
        let p = iri("http://ex.org/p");
        let a = iri("http://ex.org/a");
        let b = iri("http://ex.org/b");
        ds.insert(&src, Triple::new(a.clone(), p.clone(), Term::Iri(a.clone())));
        ds.insert(&src, Triple::new(a.clone(), p.clone(), Term::Iri(b)));
        let pat = TriplePattern::new(PatternTerm::var("x"), p, PatternTerm::var("x"));
        let bindings = ds.match_pattern(&pat);
        assert_eq!(bindings.len(), 1);
        assert_eq!(bindings[0].get("x"), Some(&Term::Iri(a)));
    }

    #[test]
    fn literal_subject_pattern_matches_nothing() {
        let mut ds = Dataset::new();
        ds.insert(&iri("http://ex.org/doc"), sample_triple(1));
        let pat = TriplePattern::new(
            Term::Literal(Literal::string("x")),
            PatternTerm::var("p"),
            PatternTerm::var("o"),
        );
        assert!(ds.match_pattern(&pat).is_empty());
    }

    #[test]
    fn export_grammar() {
        let mut ds = Dataset::new();
        assert_eq!(ds.export_ntriples(), "");
        ds.insert(
            &iri("http://ex.org/doc"),
            Triple::new(
                iri("http://ex.org/s"),
                iri("http://ex.org/p"),
                Term::Literal(Literal::string("v")),
            ),
        );
        assert_eq!(
            ds.export_ntriples(),
            "<http://ex.org/s> <http://ex.org/p> \"v\" .\n"
        );
    }

    #[test]
    fn import_skips_comments_and_blank_lines() {
        let text = "# a comment\n\n<http://ex.org/s> <http://ex.org/p> \"v\" .\n";
        let ds = Dataset::import_ntriples(text, &iri("http://ex.org/doc")).unwrap();
        assert_eq!(ds.len(), 1);
    }

    #[test]
    fn import_rejects_missing_dot() {
        let text = "<http://ex.org/s> <http://ex.org/p> \"v\"\n";
        let err = Dataset::import_ntriples(text, &iri("http://ex.org/doc")).unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.message.contains("terminal"));
    }

    #[test]
    fn import_rejects_literal_subject() {
        let text = "\"v\" <http://ex.org/p> <http://ex.org/o> .\n";
        assert!(Dataset::import_ntriples(text, &iri("http://ex.org/doc")).is_err());
    }

    #[test]
    fn round_trip_preserves_merged_view() {
        let mut ds = Dataset::new();
        let src = iri("http://ex.org/doc");
        ds.insert(
            &src,
            Triple::new(
                BlankNode::new("b1").unwrap(),
                iri("http://ex.org/p"),
                Term::Literal(Literal::date("2009-01-01")),
            ),
        );
        ds.insert(&src, sample_triple(2));
        let exported = ds.export_ntriples();
        let imported = Dataset::import_ntriples(&exported, &iri("urn:x-import:a")).unwrap();
        assert_eq!(
            ds.iter().collect::<Vec<_>>(),
            imported.iter().collect::<Vec<_>>()
        );
        assert_eq!(imported.export_ntriples(), exported);
    }

    #[test]
    fn merge_namespaces_blank_labels() {
        let text = "_:b1 <http://ex.org/p> \"v\" .\n";
        let mut ds = Dataset::import_ntriples(text, &iri("http://ex.org/a")).unwrap();
        ds.merge_ntriples(text, &iri("http://ex.org/b")).unwrap();
        // one blank per source, no accidental collapse
        assert_eq!(ds.len(), 2);
        let labels: Vec<String> = ds
            .iter()
            .filter_map(|t| match t.subject {
                Subject::Blank(b) => Some(b.label().to_string()),
                _ => None,
            })
            .collect();
        assert!(labels.contains(&"b1".to_string()));
        assert!(labels.contains(&"g2b1".to_string()));
    }
}
