//! Triple extraction from RDFa-annotated XML.
//!
//! Implements a defined subset of RDFa processing over the attributes
//! `about`, `typeof`, `property`, `rel`, `resource`, `href`, `content`,
//! `datatype`, `prefix`, `vocab` and `xmlns:*`. The subset is small
//! enough to derive outputs by hand; the rules are:
//!
//! * `about` sets the element's subject (CURIE or IRI reference,
//!   resolved against the base). Without `about`, `resource` sets it;
//!   without either, `typeof` mints a fresh blank node.
//! * `typeof` emits one `rdf:type` triple per listed term from that
//!   subject.
//! * `property` emits a literal triple from the nearest subject in scope
//!   (`about`, then `resource` when no `rel` claims it, then a fresh
//!   `typeof` blank node, then the inherited subject). The object is
//!   `content` verbatim when present, else the element's descendant text
//!   trimmed and with interior whitespace collapsed; `datatype` names the
//!   literal datatype.
//! * `rel` emits one triple per listed term from the element's `about`
//!   (or blank-node, or inherited) subject. `resource`, or `href` when
//!   `resource` is absent, supplies the object on the same element;
//!   otherwise the relation stays pending and is completed by the
//!   subject of every nearest descendant that establishes one.
//! * `prefix` (whitespace-separated `p: <iri>` pairs) and `xmlns:*`
//!   extend the prefix map for the subtree; `vocab` gives unprefixed
//!   `typeof`/`property`/`rel` terms a default namespace for the
//!   subtree.
//!
//! Semantic problems never abort an extraction: unknown prefixes,
//! unexpandable terms and relations that never find a subject are
//! reported as positioned warnings and the triple is skipped. Blank node
//! labels are `b1`, `b2`, ... in document order, so extraction is fully
//! deterministic.

use crate::model::{
    expand_curie, BlankNode, Iri, Literal, ModelError, PrefixMap, Subject, Term, Triple, RDF_TYPE,
    xsd,
};
use crate::vocab;
use crate::xml::{Position, XmlElement};

/// A non-fatal extraction problem with the source position it points at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub position: Position,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractionResult {
    pub triples: Vec<Triple>,
    pub warnings: Vec<Warning>,
}

/// Resolves an IRI reference against an absolute base.
///
/// Fragment-only references append to the base, absolute references pass
/// through, relative paths merge with the base path with `.`/`..`
/// segments removed.
pub fn resolve_reference(reference: &str, base: &Iri) -> Result<Iri, ModelError> {
    if reference
        .chars()
        .any(|c| c.is_whitespace() || c.is_control())
    {
        return Err(ModelError::MalformedReference(reference.to_string()));
    }
    if has_scheme(reference) {
        return Ok(Iri::raw(reference));
    }
    let parts = IriParts::split(base.as_str());
    let resolved = if reference.is_empty() {
        format!("{}{}{}", parts.root(), parts.path, parts.query)
    } else if let Some(frag) = reference.strip_prefix('#') {
        format!("{}{}{}#{}", parts.root(), parts.path, parts.query, frag)
    } else if reference.starts_with('?') {
        format!("{}{}{}", parts.root(), parts.path, reference)
    } else if let Some(rest) = reference.strip_prefix("//") {
        format!("{}://{}", parts.scheme, rest)
    } else if reference.starts_with('/') {
        format!("{}{}", parts.root(), remove_dot_segments(reference))
    } else {
        let directory = match parts.path.rfind('/') {
            Some(i) => &parts.path[..=i],
            None => "/",
        };
        let merged = format!("{}{}", directory, reference);
        format!("{}{}", parts.root(), remove_dot_segments(&merged))
    };
    Ok(Iri::raw(resolved))
}

fn has_scheme(reference: &str) -> bool {
    let Some(colon) = reference.find(':') else {
        return false;
    };
    let scheme = &reference[..colon];
    let mut chars = scheme.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        && !scheme.contains(['/', '#', '?'])
}

struct IriParts<'a> {
    scheme: &'a str,
    authority: &'a str,
    path: &'a str,
    query: &'a str,
}

impl<'a> IriParts<'a> {
    fn split(iri: &'a str) -> Self {
        let colon = iri.find(':').unwrap_or(0);
        let scheme = &iri[..colon];
        let mut rest = &iri[colon + 1..];
        if let Some(hash) = rest.find('#') {
            rest = &rest[..hash];
        }
        let (rest, query) = match rest.find('?') {
            Some(q) => (&rest[..q], &rest[q..]),
            None => (rest, ""),
        };
        let (authority, path) = if let Some(after) = rest.strip_prefix("//") {
            match after.find('/') {
                Some(slash) => (&after[..slash], &after[slash..]),
                None => (after, ""),
            }
        } else {
            ("", rest)
        };
        IriParts {
            scheme,
            authority,
            path,
            query,
        }
    }

    fn root(&self) -> String {
        if self.authority.is_empty() && !self.path.starts_with('/') {
            format!("{}:", self.scheme)
        } else {
            format!("{}://{}", self.scheme, self.authority)
        }
    }
}

fn remove_dot_segments(path: &str) -> String {
    let mut output: Vec<&str> = Vec::new();
    let absolute = path.starts_with('/');
    for segment in path.split('/') {
        match segment {
            "." => {}
            ".." => {
                output.pop();
            }
            s => output.push(s),
        }
    }
    let mut joined = output.join("/");
    if path.ends_with("/.") || path.ends_with("/..") {
        joined.push('/');
    }
    if absolute && !joined.starts_with('/') {
        joined.insert(0, '/');
    }
    joined
}

/// Applies the RDFa subset to an element tree. Never fails: semantic
/// problems become warnings.
pub fn extract(doc: &XmlElement, base: &Iri) -> ExtractionResult {
    let mut extractor = Extractor {
        triples: Vec::new(),
        warnings: Vec::new(),
        bnode_counter: 0,
        rel_watches: Vec::new(),
    };
    let context = Context {
        base,
        parent_subject: Subject::Iri(base.clone()),
        pending: Vec::new(),
        prefixes: vocab::builtin_registry().prefixes().clone(),
        vocab: None,
    };
    extractor.walk(doc, &context);
    for watch in &extractor.rel_watches {
        if !watch.completed {
            extractor.warnings.push(Warning {
                position: watch.position,
                message: format!("relation '{}' never found an object", watch.term),
            });
        }
    }
    extractor.warnings.sort_by_key(|w| w.position);
    ExtractionResult {
        triples: extractor.triples,
        warnings: extractor.warnings,
    }
}

#[derive(Clone)]
struct Context<'a> {
    base: &'a Iri,
    parent_subject: Subject,
    pending: Vec<PendingRel>,
    prefixes: PrefixMap,
    vocab: Option<Iri>,
}

#[derive(Clone)]
struct PendingRel {
    subject: Subject,
    predicate: Iri,
    watch: usize,
}

struct RelWatch {
    position: Position,
    term: String,
    completed: bool,
}

struct Extractor {
    triples: Vec<Triple>,
    warnings: Vec<Warning>,
    bnode_counter: usize,
    rel_watches: Vec<RelWatch>,
}

impl Extractor {
    fn warn(&mut self, position: Position, message: impl Into<String>) {
        self.warnings.push(Warning {
            position,
            message: message.into(),
        });
    }

    fn fresh_blank(&mut self) -> BlankNode {
        self.bnode_counter += 1;
        BlankNode::new(format!("b{}", self.bnode_counter)).unwrap()
    }

    /// Expands a `typeof`/`property`/`rel` term: declared CURIE first,
    /// then absolute IRI, then the subtree vocabulary for unprefixed
    /// names.
    fn expand_term(
        &mut self,
        token: &str,
        ctx: &Context<'_>,
        position: Position,
    ) -> Option<Iri> {
        if let Some(colon) = token.find(':') {
            let prefix = &token[..colon];
            if ctx.prefixes.get(prefix).is_some() {
                match expand_curie(token, &ctx.prefixes) {
                    Ok(iri) => return Some(iri),
                    Err(e) => {
                        self.warn(position, format!("cannot expand '{}': {}", token, e));
                        return None;
                    }
                }
            }
            if let Ok(iri) = Iri::new(token) {
                return Some(iri);
            }
            self.warn(position, format!("unknown prefix '{}' in '{}'", prefix, token));
            return None;
        }
        match &ctx.vocab {
            Some(ns) => Some(Iri::raw(format!("{}{}", ns.as_str(), token))),
            None => {
                self.warn(
                    position,
                    format!("term '{}' has no prefix and no vocab is in scope", token),
                );
                None
            }
        }
    }

    /// Resolves an `about`/`resource` value: declared CURIE first, else
    /// an IRI reference against the base.
    fn resolve_subject_attr(
        &mut self,
        value: &str,
        ctx: &Context<'_>,
        position: Position,
    ) -> Option<Iri> {
        if let Some(colon) = value.find(':') {
            let prefix = &value[..colon];
            if ctx.prefixes.get(prefix).is_some() {
                return match expand_curie(value, &ctx.prefixes) {
                    Ok(iri) => Some(iri),
                    Err(e) => {
                        self.warn(position, format!("cannot expand '{}': {}", value, e));
                        None
                    }
                };
            }
        }
        match resolve_reference(value, ctx.base) {
            Ok(iri) => Some(iri),
            Err(e) => {
                self.warn(position, format!("{}", e));
                None
            }
        }
    }

    fn walk(&mut self, element: &XmlElement, inherited: &Context<'_>) {
        let position = element.position;
        let mut ctx = inherited.clone();

        // xmlns:* first, then prefix=; a later declaration wins.
        for (name, value) in &element.attributes {
            if let Some(prefix) = name.strip_prefix("xmlns:") {
                match Iri::new(value.clone()) {
                    Ok(ns) => ctx.prefixes.insert(prefix, ns),
                    Err(e) => self.warn(position, format!("bad namespace for '{}': {}", name, e)),
                }
            }
        }
        if let Some(decls) = element.attr("prefix") {
            self.extend_prefixes(decls, &mut ctx.prefixes, position);
        }
        if let Some(v) = element.attr("vocab") {
            ctx.vocab = if v.is_empty() {
                None
            } else {
                match Iri::new(v) {
                    Ok(iri) => Some(iri),
                    Err(e) => {
                        self.warn(position, format!("bad vocab: {}", e));
                        ctx.vocab.clone()
                    }
                }
            };
        }

        let about = element
            .attr("about")
            .and_then(|v| self.resolve_subject_attr(v, &ctx, position));
        let resource = element
            .attr("resource")
            .and_then(|v| self.resolve_subject_attr(v, &ctx, position));
        let href = element.attr("href").and_then(|v| {
            match resolve_reference(v, ctx.base) {
                Ok(iri) => Some(iri),
                Err(e) => {
                    self.warn(position, format!("{}", e));
                    None
                }
            }
        });

        let rel_terms: Vec<Iri> = element
            .attr("rel")
            .map(|v| {
                v.split_whitespace()
                    .filter_map(|tok| self.expand_term(tok, &ctx, position))
                    .collect()
            })
            .unwrap_or_default();
        let has_rel = !rel_terms.is_empty();

        // The element's own subject, if it declares one.
        let blank = if about.is_none()
            && resource.is_none()
            && element.attr("typeof").is_some()
        {
            Some(self.fresh_blank())
        } else {
            None
        };
        let established: Option<Subject> = about
            .clone()
            .map(Subject::Iri)
            .or_else(|| resource.clone().map(Subject::Iri))
            .or_else(|| blank.clone().map(Subject::Blank));

        // A newly established subject completes every pending relation.
        if let Some(subject) = &established {
            for pending in &ctx.pending {
                self.triples.push(Triple::new(
                    pending.subject.clone(),
                    pending.predicate.clone(),
                    Term::from(subject.clone()),
                ));
                self.rel_watches[pending.watch].completed = true;
            }
            ctx.pending.clear();
        }

        if let Some(types) = element.attr("typeof") {
            let subject = established
                .clone()
                .expect("typeof always establishes a subject");
            for token in types.split_whitespace().collect::<Vec<_>>() {
                if let Some(class) = self.expand_term(token, &ctx, position) {
                    self.triples.push(Triple::new(
                        subject.clone(),
                        Iri::raw(RDF_TYPE),
                        Term::Iri(class),
                    ));
                }
            }
        }

        if let Some(props) = element.attr("property") {
            let subject = about
                .clone()
                .map(Subject::Iri)
                .or_else(|| {
                    if has_rel {
                        None // resource is the relation's object here
                    } else {
                        resource.clone().map(Subject::Iri)
                    }
                })
                .or_else(|| blank.clone().map(Subject::Blank))
                .unwrap_or_else(|| ctx.parent_subject.clone());
            let lexical = match element.attr("content") {
                Some(c) => c.to_string(),
                None => collapse_whitespace(&element.text_content()),
            };
            let datatype = match element.attr("datatype") {
                None | Some("") => Some(Iri::raw(xsd::STRING)),
                Some(dt) => self.expand_term(dt, &ctx, position),
            };
            if let Some(datatype) = datatype {
                for token in props.split_whitespace().collect::<Vec<_>>() {
                    if let Some(predicate) = self.expand_term(token, &ctx, position) {
                        self.triples.push(Triple::new(
                            subject.clone(),
                            predicate,
                            Term::Literal(Literal::new(lexical.clone(), datatype.clone())),
                        ));
                    }
                }
            }
        }

        if has_rel {
            let subject = about
                .clone()
                .map(Subject::Iri)
                .or_else(|| blank.clone().map(Subject::Blank))
                .unwrap_or_else(|| inherited.parent_subject.clone());
            let object = resource.clone().or(href);
            match object {
                Some(object) => {
                    for predicate in &rel_terms {
                        self.triples.push(Triple::new(
                            subject.clone(),
                            predicate.clone(),
                            Term::Iri(object.clone()),
                        ));
                    }
                }
                None => {
                    for predicate in &rel_terms {
                        let watch = self.rel_watches.len();
                        self.rel_watches.push(RelWatch {
                            position,
                            term: predicate.as_str().to_string(),
                            completed: false,
                        });
                        ctx.pending.push(PendingRel {
                            subject: subject.clone(),
                            predicate: predicate.clone(),
                            watch,
                        });
                    }
                }
            }
        }

        if let Some(subject) = established {
            ctx.parent_subject = subject;
        }
        for child in element.child_elements() {
            self.walk(child, &ctx);
        }
    }

    fn extend_prefixes(&mut self, decls: &str, prefixes: &mut PrefixMap, position: Position) {
        let tokens: Vec<&str> = decls.split_whitespace().collect();
        let mut i = 0;
        while i < tokens.len() {
            let Some(prefix) = tokens[i].strip_suffix(':') else {
                self.warn(
                    position,
                    format!("prefix declaration '{}' is missing ':'", tokens[i]),
                );
                i += 1;
                continue;
            };
            let Some(ns) = tokens.get(i + 1) else {
                self.warn(
                    position,
                    format!("prefix '{}' is missing a namespace", prefix),
                );
                break;
            };
            match Iri::new(*ns) {
                Ok(iri) => prefixes.insert(prefix, iri),
                Err(e) => self.warn(position, format!("bad namespace for '{}': {}", prefix, e)),
            }
            i += 2;
        }
    }
}

/// Trims both ends and collapses interior whitespace runs to single
/// spaces.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xml::parse_xml;

    fn base() -> Iri {
        Iri::new("http://ex.org/d").unwrap()
    }

    fn run(doc: &str) -> ExtractionResult {
        extract(&parse_xml(doc).unwrap(), &base())
    }

    #[test]
    fn about_and_typeof_emit_rdf_type() {
        let result = run(r##"<div about="#t1" typeof="http://omdoc.org/ontology#Theory"/>"##);
        assert_eq!(
            result.triples,
            vec![Triple::new(
                Iri::raw("http://ex.org/d#t1"),
                Iri::raw(RDF_TYPE),
                Term::Iri(Iri::raw("http://omdoc.org/ontology#Theory")),
            )]
        );
        assert!(result.warnings.is_empty());
    }

    #[test]
    fn property_with_content_and_datatype() {
        let result = run(
            r##"<div about="#d" prefix="dcx: http://purl.org/dc/elements/1.1/"><span property="dcx:date" content="2009-06-01" datatype="xsd:date"/></div>"##,
        );
        assert_eq!(
            result.triples,
            vec![Triple::new(
                Iri::raw("http://ex.org/d#d"),
                Iri::raw("http://purl.org/dc/elements/1.1/date"),
                Term::Literal(Literal::date("2009-06-01")),
            )]
        );
    }

    #[test]
    fn document_without_annotations_is_empty() {
        let result = run("<html/>");
        assert!(result.triples.is_empty());
        assert!(result.warnings.is_empty());
    }

    #[test]
    fn extraction_is_deterministic() {
        let doc = r#"<r><a typeof="foaf:Person"/><b typeof="foaf:Person"/></r>"#;
        let first = run(doc);
        let second = run(doc);
        assert_eq!(first, second);
        let labels: Vec<_> = first
            .triples
            .iter()
            .map(|t| match &t.subject {
                Subject::Blank(b) => b.label().to_string(),
                _ => panic!("expected blank subjects"),
            })
            .collect();
        assert_eq!(labels, vec!["b1", "b2"]);
    }

    #[test]
    fn reference_resolution() {
        let b = Iri::new("http://ex.org/dir/d").unwrap();
        let resolve = |r: &str| resolve_reference(r, &b).unwrap().as_str().to_string();
        assert_eq!(resolve("#t1"), "http://ex.org/dir/d#t1");
        assert_eq!(resolve("http://a/b"), "http://a/b");
        assert_eq!(resolve("sub/x"), "http://ex.org/dir/sub/x");
        assert_eq!(resolve("../up"), "http://ex.org/up");
        assert_eq!(resolve("/rooted"), "http://ex.org/rooted");
        assert_eq!(resolve(""), "http://ex.org/dir/d");
        assert!(resolve_reference("has space", &b).is_err());
    }

    #[test]
    fn collapse_whitespace_examples() {
        assert_eq!(collapse_whitespace("  a \n b\t\tc "), "a b c");
        assert_eq!(collapse_whitespace(""), "");
    }
}
