//! Project-management services over a dataset: substitute finding,
//! impact analysis, re-certification sets, verification coverage,
//! definition lookup, contact lookup, and the certification state
//! machine.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{compare_terms, Iri, Literal, Subject, Term, RDF_TYPE};
use crate::store::{Dataset, PatternTerm, TriplePattern};
use crate::vocab::{dc, foaf, omdoc, sd, sem_vm, vm};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ServiceError {
    #[error("unknown employee <{0}>: responsible for no document")]
    UnknownEmployee(Iri),
    #[error("unknown symbol <{0}>: occurs in no triple")]
    UnknownSymbol(Iri),
    #[error("orphan object <{0}>: contained in no document")]
    OrphanObject(Iri),
}

fn objects_of(ds: &Dataset, subject: &Subject, predicate: Iri) -> Vec<Term> {
    let pattern = TriplePattern::new(
        Term::from(subject.clone()),
        predicate,
        PatternTerm::var("o"),
    );
    ds.match_pattern(&pattern)
        .into_iter()
        .filter_map(|b| b.get("o").cloned())
        .collect()
}

fn subjects_of(ds: &Dataset, predicate: Iri, object: &Term) -> Vec<Subject> {
    let pattern = TriplePattern::new(PatternTerm::var("s"), predicate, object.clone());
    ds.match_pattern(&pattern)
        .into_iter()
        .filter_map(|b| b.get("s").and_then(Term::as_subject))
        .collect()
}

fn occurs_anywhere(ds: &Dataset, iri: &Iri) -> bool {
    let term = Term::Iri(iri.clone());
    let as_subject = TriplePattern::new(
        term.clone(),
        PatternTerm::var("p"),
        PatternTerm::var("o"),
    );
    let as_object = TriplePattern::new(PatternTerm::var("s"), PatternTerm::var("p"), term.clone());
    let as_predicate = TriplePattern::new(
        PatternTerm::var("s"),
        term,
        PatternTerm::var("o"),
    );
    !ds.match_pattern(&as_subject).is_empty()
        || !ds.match_pattern(&as_object).is_empty()
        || !ds.match_pattern(&as_predicate).is_empty()
}

/// Documents containing `object` via `omdoc:hasPart`.
fn containing_documents(ds: &Dataset, object: &Term) -> BTreeSet<Iri> {
    subjects_of(ds, omdoc::has_part(), object)
        .into_iter()
        .filter_map(|s| s.as_iri().cloned())
        .collect()
}

/// Candidate substitutes for an employee.
///
/// Walks the V-model: documents the employee is responsible for, their
/// parts, objects those parts refine or occur in definitions of, the
/// documents containing the related objects with `dc:date` after the
/// cutoff, and finally the responsible persons with their names. The
/// employee is excluded from their own result.
pub fn find_substitute(
    ds: &Dataset,
    employee: &Iri,
    cutoff: &Literal,
) -> Result<BTreeSet<(Iri, String)>, ServiceError> {
    let employee_term = Term::Iri(employee.clone());
    let own_documents = subjects_of(ds, vm::responsible(), &employee_term);
    if own_documents.is_empty() {
        return Err(ServiceError::UnknownEmployee(employee.clone()));
    }

    let cutoff_term = Term::Literal(cutoff.clone());
    let mut results = BTreeSet::new();
    for document in &own_documents {
        for object in objects_of(ds, document, omdoc::has_part()) {
            let Some(object) = object.as_subject() else {
                continue;
            };
            let mut related = objects_of(ds, &object, sem_vm::refines());
            related.extend(objects_of(ds, &object, omdoc::occurs_in_definition_of()));
            for related_object in related {
                for other_document in containing_documents(ds, &related_object) {
                    let doc_subject = Subject::Iri(other_document.clone());
                    let recent = objects_of(ds, &doc_subject, dc::date())
                        .iter()
                        .any(|date| {
                            compare_terms(date, &cutoff_term)
                                .is_some_and(|ord| ord.is_gt())
                        });
                    if !recent {
                        continue;
                    }
                    for person in objects_of(ds, &doc_subject, vm::responsible()) {
                        let Some(Subject::Iri(person)) = person.as_subject() else {
                            continue;
                        };
                        if &person == employee {
                            continue; // not their own substitute
                        }
                        for name in
                            objects_of(ds, &Subject::Iri(person.clone()), foaf::name())
                        {
                            if let Term::Literal(name) = name {
                                results.insert((person.clone(), name.lexical().to_string()));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(results)
}

/// Objects and documents affected by a change to `root`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImpactReport {
    pub root: Iri,
    pub objects: BTreeSet<Iri>,
    pub documents: BTreeSet<Iri>,
}

/// Transitive closure of the dependency edges seeded at `object`:
/// everything that refines it (inverse `semVM:refines`, recursively) and
/// everything defined in terms of it (forward
/// `omdoc:occursInDefinitionOf`, recursively), plus the documents
/// containing any affected object. Cycles terminate via the visited set.
pub fn impact_set(ds: &Dataset, object: &Iri) -> ImpactReport {
    let mut objects: BTreeSet<Iri> = BTreeSet::new();
    let mut queue: VecDeque<Iri> = VecDeque::new();
    objects.insert(object.clone());
    queue.push_back(object.clone());

    while let Some(current) = queue.pop_front() {
        let current_term = Term::Iri(current.clone());
        let mut next: Vec<Iri> = subjects_of(ds, sem_vm::refines(), &current_term)
            .into_iter()
            .filter_map(|s| s.as_iri().cloned())
            .collect();
        next.extend(
            objects_of(
                ds,
                &Subject::Iri(current.clone()),
                omdoc::occurs_in_definition_of(),
            )
            .into_iter()
            .filter_map(|t| match t {
                Term::Iri(iri) => Some(iri),
                _ => None,
            }),
        );
        for neighbour in next {
            if objects.insert(neighbour.clone()) {
                queue.push_back(neighbour);
            }
        }
    }

    let documents = objects
        .iter()
        .flat_map(|o| containing_documents(ds, &Term::Iri(o.clone())))
        .collect();
    ImpactReport {
        root: object.clone(),
        objects,
        documents,
    }
}

/// Review state of a subject. Absent subjects are unreviewed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ReviewState {
    Unreviewed,
    Approved,
    Rejected,
}

impl fmt::Display for ReviewState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ReviewState::Unreviewed => "unreviewed",
            ReviewState::Approved => "approved",
            ReviewState::Rejected => "rejected",
        };
        f.write_str(s)
    }
}

impl FromStr for ReviewState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unreviewed" => Ok(ReviewState::Unreviewed),
            "approved" => Ok(ReviewState::Approved),
            "rejected" => Ok(ReviewState::Rejected),
            other => Err(format!("unknown state '{}'", other)),
        }
    }
}

/// Certification states, kept outside the RDF dataset and persisted as
/// sorted `iri TAB state` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CertificationState {
    states: BTreeMap<Iri, ReviewState>,
}

impl CertificationState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, subject: &Iri) -> ReviewState {
        self.states
            .get(subject)
            .copied()
            .unwrap_or(ReviewState::Unreviewed)
    }

    pub fn approve(&mut self, subject: &Iri) {
        self.states.insert(subject.clone(), ReviewState::Approved);
    }

    pub fn set(&mut self, subject: &Iri, state: ReviewState) {
        self.states.insert(subject.clone(), state);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Iri, ReviewState)> {
        self.states.iter().map(|(iri, s)| (iri, *s))
    }

    /// Sorted `<iri>\t<state>` lines, LF-terminated.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for (iri, state) in &self.states {
            out.push_str(iri.as_str());
            out.push('\t');
            out.push_str(&state.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_lines(text: &str) -> Result<Self, String> {
        let mut states = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (iri, state) = line
                .split_once('\t')
                .ok_or_else(|| format!("line {}: expected '<iri>\\t<state>'", idx + 1))?;
            states.insert(Iri::raw(iri), state.parse()?);
        }
        Ok(CertificationState { states })
    }
}

/// Rejects an object: the object itself, everything in its impact set,
/// and every affected document become rejected. Idempotent; previously
/// approved members of the impact set flip to rejected.
pub fn reject(ds: &Dataset, state: &mut CertificationState, object: &Iri) {
    let report = impact_set(ds, object);
    for affected in report.objects.iter().chain(report.documents.iter()) {
        state.set(affected, ReviewState::Rejected);
    }
}

/// Documents changed after `since` plus every document reachable from a
/// changed document's objects through the dependency edges.
pub fn recertification_set(ds: &Dataset, since: &Literal) -> BTreeSet<Iri> {
    let since_term = Term::Literal(since.clone());
    let date_pattern = TriplePattern::new(
        PatternTerm::var("d"),
        dc::date(),
        PatternTerm::var("date"),
    );
    let changed: BTreeSet<Iri> = ds
        .match_pattern(&date_pattern)
        .into_iter()
        .filter(|b| {
            b.get("date")
                .and_then(|date| compare_terms(date, &since_term))
                .is_some_and(|ord| ord.is_gt())
        })
        .filter_map(|b| match b.get("d") {
            Some(Term::Iri(iri)) => Some(iri.clone()),
            _ => None,
        })
        .collect();

    let mut result = changed.clone();
    for document in &changed {
        for object in objects_of(ds, &Subject::Iri(document.clone()), omdoc::has_part()) {
            if let Term::Iri(object) = object {
                result.extend(impact_set(ds, &object).documents);
            }
        }
    }
    result
}

/// The definition objects recorded for a symbol via `sd:definedBy`.
/// Multiple results are legal: recaps redefine material in other
/// documents.
pub fn definition_lookup(ds: &Dataset, symbol: &Iri) -> Result<BTreeSet<Iri>, ServiceError> {
    if !occurs_anywhere(ds, symbol) {
        return Err(ServiceError::UnknownSymbol(symbol.clone()));
    }
    Ok(
        objects_of(ds, &Subject::Iri(symbol.clone()), sd::defined_by())
            .into_iter()
            .filter_map(|t| match t {
                Term::Iri(iri) => Some(iri),
                _ => None,
            })
            .collect(),
    )
}

/// Definitions of every symbol whose `dc:title` equals `name` — the
/// display-name route, which surfaces same-appearance/different-meaning
/// symbol clashes as multiple results.
pub fn definition_lookup_by_name(ds: &Dataset, name: &str) -> BTreeSet<Iri> {
    let title = Term::Literal(Literal::string(name));
    let mut out = BTreeSet::new();
    for symbol in subjects_of(ds, dc::title(), &title) {
        let Subject::Iri(symbol) = symbol else {
            continue;
        };
        let typed = ds.contains(&crate::model::Triple::new(
            Subject::Iri(symbol.clone()),
            Iri::raw(RDF_TYPE),
            Term::Iri(omdoc::symbol()),
        ));
        if !typed {
            continue;
        }
        if let Ok(defs) = definition_lookup(ds, &symbol) {
            out.extend(defs);
        }
    }
    out
}

/// (total, verified, unverified) counts over subjects typed
/// `omdoc:Assertion`. An assertion is verified when one of its
/// `sd:provedBy` proofs carries `sd:proofState` "verified".
pub fn verification_coverage(ds: &Dataset) -> (usize, usize, usize) {
    let assertions: BTreeSet<Subject> = subjects_of(
        ds,
        Iri::raw(RDF_TYPE),
        &Term::Iri(omdoc::assertion()),
    )
    .into_iter()
    .collect();
    let verified_state = Term::Literal(Literal::string("verified"));
    let verified = assertions
        .iter()
        .filter(|assertion| {
            objects_of(ds, assertion, sd::proved_by()).iter().any(|proof| {
                proof.as_subject().is_some_and(|proof| {
                    objects_of(ds, &proof, sd::proof_state())
                        .iter()
                        .any(|s| s == &verified_state)
                })
            })
        })
        .count();
    let total = assertions.len();
    (total, verified, total - verified)
}

/// Who to ask about an object: the responsible persons and reviewers of
/// every document containing it, with their names.
pub fn whois(
    ds: &Dataset,
    object: &Iri,
) -> Result<BTreeSet<(String, Iri, String)>, ServiceError> {
    let documents = containing_documents(ds, &Term::Iri(object.clone()));
    if documents.is_empty() {
        return Err(ServiceError::OrphanObject(object.clone()));
    }
    let mut out = BTreeSet::new();
    for document in &documents {
        let doc_subject = Subject::Iri(document.clone());
        for (role, predicate) in [("responsible", vm::responsible()), ("reviewer", vm::reviewer())]
        {
            for person in objects_of(ds, &doc_subject, predicate) {
                let Some(Subject::Iri(person)) = person.as_subject() else {
                    continue;
                };
                for name in objects_of(ds, &Subject::Iri(person.clone()), foaf::name()) {
                    if let Term::Literal(name) = name {
                        out.insert((role.to_string(), person.clone(), name.lexical().to_string()));
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Triple;

    fn iri(s: &str) -> Iri {
        Iri::raw(s)
    }

    fn doc(n: &str) -> Iri {
        iri(&format!("http://ex.org/docs/{}", n))
    }

    fn obj(n: &str) -> Iri {
        iri(&format!("http://ex.org/docs/o#{}", n))
    }

    struct Builder {
        ds: Dataset,
    }

    impl Builder {
        fn new() -> Self {
            Builder { ds: Dataset::new() }
        }

        fn triple(mut self, s: &Iri, p: Iri, o: Term) -> Self {
            let src = iri("http://ex.org/docs/src");
            self.ds.insert(&src, Triple::new(s.clone(), p, o));
            self
        }

        fn part(self, d: &Iri, o: &Iri) -> Self {
            let o = Term::Iri(o.clone());
            self.triple(&d.clone(), omdoc::has_part(), o)
        }

        fn refines(self, a: &Iri, b: &Iri) -> Self {
            let b = Term::Iri(b.clone());
            self.triple(&a.clone(), sem_vm::refines(), b)
        }
    }

    #[test]
    fn impact_of_a_sink_is_itself() {
        let d = doc("d1");
        let o = obj("o1");
        let ds = Builder::new().part(&d, &o).ds;
        let report = impact_set(&ds, &o);
        assert_eq!(report.objects, [o.clone()].into_iter().collect());
        assert_eq!(report.documents, [d].into_iter().collect());
        assert_eq!(report.root, o);
    }

    #[test]
    fn impact_follows_inverse_refinement_chain() {
        let (o1, o2, o3) = (obj("o1"), obj("o2"), obj("o3"));
        let ds = Builder::new()
            .refines(&o3, &o2)
            .refines(&o2, &o1)
            .ds;
        let report = impact_set(&ds, &o1);
        assert_eq!(
            report.objects,
            [o1, o2, o3].into_iter().collect::<BTreeSet<_>>()
        );
    }

    #[test]
    fn impact_terminates_on_cycles() {
        let (o1, o2) = (obj("o1"), obj("o2"));
        let ds = Builder::new().refines(&o1, &o2).refines(&o2, &o1).ds;
        let report = impact_set(&ds, &o1);
        assert_eq!(report.objects, [o1, o2].into_iter().collect::<BTreeSet<_>>());
    }

    #[test]
    fn reject_is_idempotent_and_propagates() {
        let (o1, o2) = (obj("o1"), obj("o2"));
        let d = doc("d1");
        let ds = Builder::new().refines(&o2, &o1).part(&d, &o2).ds;
        let mut state = CertificationState::new();
        state.approve(&o2);
        reject(&ds, &mut state, &o1);
        assert_eq!(state.get(&o1), ReviewState::Rejected);
        assert_eq!(state.get(&o2), ReviewState::Rejected); // approval flipped
        assert_eq!(state.get(&d), ReviewState::Rejected);
        let snapshot = state.clone();
        reject(&ds, &mut state, &o1);
        assert_eq!(state, snapshot);
    }

    #[test]
    fn certification_state_round_trips_as_sorted_lines() {
        let mut state = CertificationState::new();
        state.set(&obj("b"), ReviewState::Rejected);
        state.approve(&obj("a"));
        let lines = state.to_lines();
        assert_eq!(
            lines,
            "http://ex.org/docs/o#a\tapproved\nhttp://ex.org/docs/o#b\trejected\n"
        );
        assert_eq!(CertificationState::from_lines(&lines).unwrap(), state);
        assert_eq!(
            state.get(&obj("untouched")),
            ReviewState::Unreviewed
        );
    }

    #[test]
    fn unknown_employee_is_an_error() {
        let ds = Builder::new().part(&doc("d1"), &obj("o1")).ds;
        let err = find_substitute(&ds, &iri("http://ex.org/nobody"), &Literal::date("2009-01-01"))
            .unwrap_err();
        assert!(matches!(err, ServiceError::UnknownEmployee(_)));
    }

    #[test]
    fn recertification_without_dates_is_empty() {
        let ds = Builder::new().part(&doc("d1"), &obj("o1")).ds;
        assert!(recertification_set(&ds, &Literal::date("2009-01-01")).is_empty());
    }

    #[test]
    fn coverage_of_empty_dataset_is_zero() {
        assert_eq!(verification_coverage(&Dataset::new()), (0, 0, 0));
    }

    #[test]
    fn whois_unknown_object_is_orphan() {
        let ds = Builder::new().part(&doc("d1"), &obj("o1")).ds;
        let err = whois(&ds, &obj("elsewhere")).unwrap_err();
        assert!(matches!(err, ServiceError::OrphanObject(_)));
    }

    #[test]
    fn definition_lookup_unknown_symbol() {
        let ds = Builder::new().part(&doc("d1"), &obj("o1")).ds;
        let err = definition_lookup(&ds, &obj("missing")).unwrap_err();
        assert!(matches!(err, ServiceError::UnknownSymbol(_)));
    }
}
