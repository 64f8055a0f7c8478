//! Manifest-driven ingestion of document collections, link-integrity
//! validation, and per-format statistics.
//!
//! A manifest is line-oriented UTF-8: a header line `@base <iri>`, then
//! one entry per line as `path TAB iri TAB format TAB
//! key=value;key=value`. The metadata field is optional; recognized keys
//! are `title`, `date`, `creator` and `responsible`. Blank lines and
//! `#` comments are skipped. Entry IRIs may be relative; they resolve
//! against the base.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{Iri, Literal, Subject, Term, Triple, RDF_TYPE};
use crate::rdfa::{extract, resolve_reference, Warning};
use crate::store::Dataset;
use crate::vocab::{dc, omdoc, sd, sem_vm, vm};
use crate::xml::parse_xml;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("manifest line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing file: {path}")]
    MissingFile { path: PathBuf },
    #[error("{path}: {message}")]
    Xml { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub iri: Iri,
    pub format: String,
    pub metadata: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollectionManifest {
    pub base: Iri,
    pub entries: Vec<ManifestEntry>,
}

pub fn parse_manifest(text: &str) -> Result<CollectionManifest, ManifestError> {
    let mut base: Option<Iri> = None;
    let mut entries = Vec::new();
    let mut seen: BTreeSet<Iri> = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("@base") {
            let rest = rest.trim();
            let iri = rest
                .strip_prefix('<')
                .and_then(|r| r.strip_suffix('>'))
                .ok_or_else(|| ManifestError::Syntax {
                    line: line_no,
                    message: "expected @base <iri>".into(),
                })?;
            base = Some(Iri::new(iri).map_err(|e| ManifestError::Syntax {
                line: line_no,
                message: e.to_string(),
            })?);
            continue;
        }
        let Some(base) = &base else {
            return Err(ManifestError::Syntax {
                line: line_no,
                message: "entry before @base header".into(),
            });
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 || fields.len() > 4 {
            return Err(ManifestError::Syntax {
                line: line_no,
                message: "expected path TAB iri TAB format [TAB metadata]".into(),
            });
        }
        let iri = resolve_reference(fields[1], base).map_err(|e| ManifestError::Syntax {
            line: line_no,
            message: e.to_string(),
        })?;
        if !seen.insert(iri.clone()) {
            return Err(ManifestError::Syntax {
                line: line_no,
                message: format!("duplicate document IRI <{}>", iri),
            });
        }
        let mut metadata = Vec::new();
        if let Some(meta) = fields.get(3) {
            for pair in meta.split(';').filter(|p| !p.is_empty()) {
                let Some((key, value)) = pair.split_once('=') else {
                    return Err(ManifestError::Syntax {
                        line: line_no,
                        message: format!("metadata '{}' is not key=value", pair),
                    });
                };
                if !matches!(key, "title" | "date" | "creator" | "responsible") {
                    return Err(ManifestError::Syntax {
                        line: line_no,
                        message: format!("unknown metadata key '{}'", key),
                    });
                }
                metadata.push((key.to_string(), value.to_string()));
            }
        }
        entries.push(ManifestEntry {
            path: PathBuf::from(fields[0]),
            iri,
            format: fields[2].to_string(),
            metadata,
        });
    }
    let base = base.ok_or(ManifestError::Syntax {
        line: 1,
        message: "manifest is missing the @base header".into(),
    })?;
    Ok(CollectionManifest { base, entries })
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub dataset: Dataset,
    pub warnings: Vec<(Iri, Warning)>,
}

/// Ingests the collection a manifest file describes. XML entries are
/// extracted with the document IRI as base; other format tags get a
/// `dc:format` stub triple only. Manifest metadata materializes as
/// `dc:*`/`vm:responsible` triples in the document's named graph.
pub fn ingest(manifest_path: &Path) -> Result<IngestReport, ManifestError> {
    let text = std::fs::read_to_string(manifest_path).map_err(|e| ManifestError::Io {
        path: manifest_path.to_path_buf(),
        message: e.to_string(),
    })?;
    let manifest = parse_manifest(&text)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    ingest_manifest(&manifest, dir)
}

/// Ingestion with the manifest already parsed; `dir` anchors entry
/// paths.
pub fn ingest_manifest(
    manifest: &CollectionManifest,
    dir: &Path,
) -> Result<IngestReport, ManifestError> {
    let mut report = IngestReport::default();
    for (index, entry) in manifest.entries.iter().enumerate() {
        let path = dir.join(&entry.path);
        if !path.is_file() {
            return Err(ManifestError::MissingFile { path });
        }
        report.dataset.ensure_graph(&entry.iri);

        for (key, value) in &entry.metadata {
            let triple = match key.as_str() {
                "title" => Triple::new(
                    entry.iri.clone(),
                    dc::title(),
                    Term::Literal(Literal::string(value.clone())),
                ),
                "date" => Triple::new(
                    entry.iri.clone(),
                    dc::date(),
                    Term::Literal(Literal::date(value.clone())),
                ),
                "creator" => Triple::new(
                    entry.iri.clone(),
                    dc::creator(),
                    Term::Literal(Literal::string(value.clone())),
                ),
                "responsible" => {
                    let person =
                        resolve_reference(value, &manifest.base).map_err(|e| {
                            ManifestError::Syntax {
                                line: 0,
                                message: e.to_string(),
                            }
                        })?;
                    Triple::new(entry.iri.clone(), vm::responsible(), Term::Iri(person))
                }
                _ => unreachable!("parse_manifest validates keys"),
            };
            report.dataset.insert(&entry.iri, triple);
        }

        if entry.format == "xml" {
            let content =
                std::fs::read_to_string(&path).map_err(|e| ManifestError::Io {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
            let doc = parse_xml(&content).map_err(|e| ManifestError::Xml {
                path: path.clone(),
                message: e.to_string(),
            })?;
            let result = extract(&doc, &entry.iri);
            // blank labels are unique per document; a per-entry tag keeps
            // them distinct across the collection
            let tag = format!("g{}", index + 1);
            for triple in result.triples {
                report
                    .dataset
                    .insert(&entry.iri, namespace_blanks(triple, &tag));
            }
            report
                .warnings
                .extend(result.warnings.into_iter().map(|w| (entry.iri.clone(), w)));
        } else {
            report.dataset.insert(
                &entry.iri,
                Triple::new(
                    entry.iri.clone(),
                    dc::format(),
                    Term::Literal(Literal::string(entry.format.clone())),
                ),
            );
        }
    }
    Ok(report)
}

fn namespace_blanks(t: Triple, tag: &str) -> Triple {
    use crate::model::BlankNode;
    let relabel =
        |b: &BlankNode| BlankNode::new(format!("{}{}", tag, b.label())).expect("valid label");
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

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    pub document: Iri,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }
}

/// Cross-document link integrity:
///
/// * refinement targets that no document contains (error),
/// * `xsd:date` literals that are not valid dates (error),
/// * documents without a responsible person (warning),
/// * symbols without a recorded definition (warning).
pub fn validate(ds: &Dataset) -> ValidationReport {
    let mut findings = Vec::new();

    let contained: BTreeSet<&Term> = ds
        .graphs()
        .flat_map(|(_, g)| g.iter())
        .filter(|t| t.predicate == omdoc::has_part())
        .map(|t| &t.object)
        .collect();

    let documents: BTreeSet<&Subject> = ds
        .graphs()
        .flat_map(|(_, g)| g.iter())
        .filter(|t| t.predicate == omdoc::has_part())
        .map(|t| &t.subject)
        .collect();

    for (source, graph) in ds.graphs() {
        for t in graph.iter() {
            if t.predicate == sem_vm::refines() && !contained.contains(&t.object) {
                findings.push(Finding {
                    severity: Severity::Error,
                    document: source.clone(),
                    message: format!(
                        "refinement target {} is contained in no document",
                        crate::model::serialize_term(&t.object)
                    ),
                });
            }
            if let Term::Literal(l) = &t.object {
                if l.datatype().as_str() == crate::model::xsd::DATE && !l.is_valid_date() {
                    findings.push(Finding {
                        severity: Severity::Error,
                        document: source.clone(),
                        message: format!("malformed xsd:date literal \"{}\"", l.lexical()),
                    });
                }
            }
            if t.predicate.as_str() == RDF_TYPE && t.object == Term::Iri(omdoc::symbol()) {
                let has_definition = ds
                    .match_pattern(&crate::store::TriplePattern::new(
                        Term::from(t.subject.clone()),
                        sd::defined_by(),
                        crate::store::PatternTerm::var("d"),
                    ))
                    .is_empty();
                if has_definition {
                    findings.push(Finding {
                        severity: Severity::Warning,
                        document: source.clone(),
                        message: format!(
                            "symbol {} has no definition link",
                            crate::model::serialize_term(&Term::from(t.subject.clone()))
                        ),
                    });
                }
            }
        }
    }

    for document in documents {
        if let Subject::Iri(doc_iri) = document {
            let responsible = ds.match_pattern(&crate::store::TriplePattern::new(
                Term::Iri(doc_iri.clone()),
                vm::responsible(),
                crate::store::PatternTerm::var("p"),
            ));
            if responsible.is_empty() {
                findings.push(Finding {
                    severity: Severity::Warning,
                    document: doc_iri.clone(),
                    message: "document has no responsible person".into(),
                });
            }
        }
    }

    findings.sort_by(|a, b| {
        a.document
            .cmp(&b.document)
            .then_with(|| a.message.cmp(&b.message))
    });
    ValidationReport { findings }
}

/// Per-format document and triple counts, grouped over the manifest's
/// format tags, sorted by tag.
pub fn stats(ds: &Dataset, manifest: &CollectionManifest) -> Vec<(String, usize, usize)> {
    let mut rows: Vec<(String, usize, usize)> = Vec::new();
    let mut formats: Vec<&str> = manifest.entries.iter().map(|e| e.format.as_str()).collect();
    formats.sort_unstable();
    formats.dedup();
    for format in formats {
        let entries = manifest.entries.iter().filter(|e| e.format == format);
        let mut docs = 0;
        let mut triples = 0;
        for entry in entries {
            docs += 1;
            triples += ds.graph(&entry.iri).map(|g| g.len()).unwrap_or(0);
        }
        rows.push((format.to_string(), docs, triples));
    }
    rows
}
