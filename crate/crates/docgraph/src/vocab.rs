//! Namespace constants for the formality-dimension vocabularies and
//! classification of predicates into dimensions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::model::{Iri, PrefixMap};
use crate::store::Dataset;

macro_rules! vocabulary {
    ($mod_name:ident, $ns:expr, { $($fn_name:ident => $local:expr),* $(,)? }) => {
        pub mod $mod_name {
            use crate::model::Iri;

            pub const NS: &str = $ns;

            $(pub fn $fn_name() -> Iri {
                Iri::raw(concat!($ns, $local))
            })*
        }
    };
}

vocabulary!(vm, "http://www.sams-projekt.de/ontologies/VersionManagement#", {
    responsible => "responsible",
    reviewer => "reviewer",
    state => "state",
});

vocabulary!(sem_vm, "http://www.sams-projekt.de/ontologies/V-model#", {
    refines => "refines",
});

vocabulary!(omdoc, "http://omdoc.org/ontology#", {
    theory => "Theory",
    symbol => "Symbol",
    definition => "Definition",
    assertion => "Assertion",
    proof => "Proof",
    occurs_in_definition_of => "occursInDefinitionOf",
    has_part => "hasPart",
});

vocabulary!(dc, "http://purl.org/dc/elements/1.1/", {
    title => "title",
    date => "date",
    creator => "creator",
    format => "format",
});

vocabulary!(foaf, "http://xmlns.com/foaf/0.1/", {
    name => "name",
    person => "Person",
});

vocabulary!(sd, "http://www.sams-projekt.de/ontologies/SAMSDocs#", {
    definition_table => "DefinitionTable",
    proof_state => "proofState",
    certification_state => "certificationState",
    doc_state => "docState",
    defined_by => "definedBy",
    proved_by => "provedBy",
});

pub const XSD_NS: &str = "http://www.w3.org/2001/XMLSchema#";
pub const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";

/// The formality dimension a predicate namespace belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dimension {
    Object,
    Collection,
    Document,
    Organization,
    Project,
    External,
    Unknown,
}

impl Dimension {
    pub const ALL: [Dimension; 7] = [
        Dimension::Object,
        Dimension::Collection,
        Dimension::Document,
        Dimension::Organization,
        Dimension::Project,
        Dimension::External,
        Dimension::Unknown,
    ];
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Dimension::Object => "Object",
            Dimension::Collection => "Collection",
            Dimension::Document => "Document",
            Dimension::Organization => "Organization",
            Dimension::Project => "Project",
            Dimension::External => "External",
            Dimension::Unknown => "Unknown",
        };
        f.write_str(name)
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "object" => Ok(Dimension::Object),
            "collection" => Ok(Dimension::Collection),
            "document" => Ok(Dimension::Document),
            "organization" => Ok(Dimension::Organization),
            "project" => Ok(Dimension::Project),
            "external" => Ok(Dimension::External),
            "unknown" => Ok(Dimension::Unknown),
            other => Err(format!("unknown dimension '{}'", other)),
        }
    }
}

/// Namespace constants, prefix declarations and per-namespace term lists
/// of the built-in vocabularies. Immutable after construction.
#[derive(Debug, Clone)]
pub struct VocabularyRegistry {
    prefixes: PrefixMap,
    namespace_dimensions: Vec<(&'static str, Dimension)>,
    term_overrides: BTreeMap<String, Dimension>,
    terms: Vec<(&'static str, &'static [&'static str])>,
}

/// Registry covering the five project dimensions plus the external
/// vocabularies (Dublin Core elements, FOAF) and the XSD/RDF namespaces.
pub fn builtin_registry() -> VocabularyRegistry {
    let mut prefixes = PrefixMap::new();
    for (prefix, ns) in [
        ("vm", vm::NS),
        ("semVM", sem_vm::NS),
        ("omdoc", omdoc::NS),
        ("dc", dc::NS),
        ("foaf", foaf::NS),
        ("sd", sd::NS),
        ("xsd", XSD_NS),
        ("rdf", RDF_NS),
    ] {
        prefixes.insert(prefix, Iri::raw(ns));
    }

    let namespace_dimensions = vec![
        (vm::NS, Dimension::Organization),
        (sem_vm::NS, Dimension::Collection),
        (omdoc::NS, Dimension::Object),
        (dc::NS, Dimension::Document),
        (foaf::NS, Dimension::External),
        (sd::NS, Dimension::Project),
    ];

    // omdoc:hasPart expresses document layout containment, not
    // mathematical structure; it is the one term classified off its
    // namespace.
    let mut term_overrides = BTreeMap::new();
    term_overrides.insert(omdoc::has_part().as_str().to_string(), Dimension::Document);

    let terms: Vec<(&'static str, &'static [&'static str])> = vec![
        (vm::NS, &["responsible", "reviewer", "state"]),
        (sem_vm::NS, &["refines"]),
        (
            omdoc::NS,
            &[
                "Theory",
                "Symbol",
                "Definition",
                "Assertion",
                "Proof",
                "occursInDefinitionOf",
                "hasPart",
            ],
        ),
        (dc::NS, &["title", "date", "creator", "format"]),
        (foaf::NS, &["name", "Person"]),
        (
            sd::NS,
            &[
                "DefinitionTable",
                "proofState",
                "certificationState",
                "docState",
                "definedBy",
                "provedBy",
            ],
        ),
    ];

    VocabularyRegistry {
        prefixes,
        namespace_dimensions,
        term_overrides,
        terms,
    }
}

impl VocabularyRegistry {
    /// Prefix declarations for all registered namespaces; used as the
    /// initial context by the extractor and the query parser.
    pub fn prefixes(&self) -> &PrefixMap {
        &self.prefixes
    }

    /// Classifies a predicate: term-level overrides first, then the
    /// longest registered namespace prefix, else `Unknown`.
    pub fn dimension_of(&self, predicate: &Iri) -> Dimension {
        if let Some(dim) = self.term_overrides.get(predicate.as_str()) {
            return *dim;
        }
        self.namespace_dimensions
            .iter()
            .filter(|(ns, _)| predicate.as_str().starts_with(ns))
            .max_by_key(|(ns, _)| ns.len())
            .map(|(_, dim)| *dim)
            .unwrap_or(Dimension::Unknown)
    }

    /// Every registered term with its dimension, sorted by IRI.
    pub fn dump(&self) -> Vec<(Iri, Dimension)> {
        let mut rows: Vec<(Iri, Dimension)> = self
            .terms
            .iter()
            .flat_map(|(ns, locals)| {
                locals.iter().map(move |local| {
                    let iri = Iri::raw(format!("{}{}", ns, local));
                    let dim = self.dimension_of(&iri);
                    (iri, dim)
                })
            })
            .collect();
        rows.sort();
        rows
    }
}

/// Dataset restricted to triples whose predicate classifies into `keep`;
/// named-graph provenance is preserved.
pub fn filter_by_dimensions(
    ds: &Dataset,
    keep: &BTreeSet<Dimension>,
    registry: &VocabularyRegistry,
) -> Dataset {
    let mut out = Dataset::new();
    for (source, graph) in ds.graphs() {
        out.ensure_graph(source);
        for t in graph.iter() {
            if keep.contains(&registry.dimension_of(&t.predicate)) {
                out.insert(source, t.clone());
            }
        }
    }
    out
}

/// Convenience for classifying with the built-in registry.
pub fn dimension_of(predicate: &Iri, registry: &VocabularyRegistry) -> Dimension {
    registry.dimension_of(predicate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Term, Triple};

    #[test]
    fn listed_terms_resolve_to_registered_iris() {
        assert_eq!(omdoc::theory().as_str(), "http://omdoc.org/ontology#Theory");
        assert_eq!(
            vm::responsible().as_str(),
            "http://www.sams-projekt.de/ontologies/VersionManagement#responsible"
        );
        let reg = builtin_registry();
        assert_eq!(
            reg.prefixes().expand("semVM:refines").unwrap(),
            sem_vm::refines()
        );
    }

    #[test]
    fn dimension_classification() {
        let reg = builtin_registry();
        assert_eq!(reg.dimension_of(&vm::responsible()), Dimension::Organization);
        assert_eq!(reg.dimension_of(&sem_vm::refines()), Dimension::Collection);
        assert_eq!(reg.dimension_of(&dc::date()), Dimension::Document);
        assert_eq!(
            reg.dimension_of(&omdoc::occurs_in_definition_of()),
            Dimension::Object
        );
        assert_eq!(reg.dimension_of(&foaf::name()), Dimension::External);
        assert_eq!(reg.dimension_of(&sd::proof_state()), Dimension::Project);
        assert_eq!(
            reg.dimension_of(&Iri::raw("http://example.org/x")),
            Dimension::Unknown
        );
    }

    #[test]
    fn has_part_is_classified_at_term_level() {
        let reg = builtin_registry();
        assert_eq!(reg.dimension_of(&omdoc::has_part()), Dimension::Document);
        assert_eq!(reg.dimension_of(&omdoc::symbol()), Dimension::Object);
    }

    #[test]
    fn namespaces_are_pairwise_non_prefixing() {
        let reg = builtin_registry();
        let namespaces: Vec<&str> = reg.namespace_dimensions.iter().map(|(ns, _)| *ns).collect();
        for a in &namespaces {
            for b in &namespaces {
                if a != b {
                    assert!(!a.starts_with(b), "{} is prefixed by {}", a, b);
                }
            }
        }
    }

    fn toy_dataset() -> Dataset {
        let mut ds = Dataset::new();
        let src = Iri::raw("http://ex.org/doc");
        let s = Iri::raw("http://ex.org/s");
        for p in [vm::responsible(), sem_vm::refines(), dc::date(), foaf::name()] {
            ds.insert(
                &src,
                Triple::new(s.clone(), p, Term::Iri(Iri::raw("http://ex.org/o"))),
            );
        }
        ds
    }

    #[test]
    fn filter_identity_and_empty() {
        let reg = builtin_registry();
        let ds = toy_dataset();
        let all: BTreeSet<Dimension> = Dimension::ALL.into_iter().collect();
        assert_eq!(filter_by_dimensions(&ds, &all, &reg), ds);
        let none = BTreeSet::new();
        assert!(filter_by_dimensions(&ds, &none, &reg).is_empty());
    }

    #[test]
    fn singleton_filters_partition_the_merged_view() {
        let reg = builtin_registry();
        let ds = toy_dataset();
        let mut total = 0;
        for dim in Dimension::ALL {
            let keep: BTreeSet<Dimension> = [dim].into_iter().collect();
            let filtered = filter_by_dimensions(&ds, &keep, &reg);
            total += filtered.len();
            for t in filtered.iter() {
                assert_eq!(reg.dimension_of(&t.predicate), dim);
            }
        }
        assert_eq!(total, ds.len());
    }

    #[test]
    fn filter_is_idempotent() {
        let reg = builtin_registry();
        let ds = toy_dataset();
        let keep: BTreeSet<Dimension> = [Dimension::Collection].into_iter().collect();
        let once = filter_by_dimensions(&ds, &keep, &reg);
        let twice = filter_by_dimensions(&once, &keep, &reg);
        assert_eq!(once, twice);
    }
}
