//! RDF terms, triples, prefix maps, and typed-literal comparison.
//!
//! Everything in here is an immutable value type; the rest of the crate
//! passes these around freely.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

/// XSD datatype IRIs used by literal handling.
pub mod xsd {
    pub const STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
    pub const DATE: &str = "http://www.w3.org/2001/XMLSchema#date";
    pub const INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
    pub const DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
}

/// `rdf:type`, the one RDF-namespace predicate the extractor emits.
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown prefix '{0}'")]
    UnknownPrefix(String),
    #[error("malformed CURIE '{0}'")]
    MalformedCurie(String),
    #[error("invalid IRI '{0}': {1}")]
    InvalidIri(String, &'static str),
    #[error("invalid blank node label '{0}'")]
    InvalidBlankLabel(String),
    #[error("malformed reference '{0}'")]
    MalformedReference(String),
    #[error("invalid term syntax '{0}'")]
    InvalidTerm(String),
}

/// An absolute IRI.
///
/// Validation is syntactic: a scheme separator must appear before any
/// `/`, `#` or `?`, and the text may not contain whitespace or control
/// characters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self, ModelError> {
        let value = value.into();
        if value.chars().any(|c| c.is_whitespace() || c.is_control()) {
            return Err(ModelError::InvalidIri(
                value,
                "contains whitespace or control characters",
            ));
        }
        match value.find(':') {
            None => Err(ModelError::InvalidIri(value, "missing scheme separator")),
            Some(colon) => {
                if value[..colon].contains(['/', '#', '?']) {
                    Err(ModelError::InvalidIri(
                        value,
                        "scheme separator must precede '/', '#' and '?'",
                    ))
                } else {
                    Ok(Iri(value))
                }
            }
        }
    }

    /// Wraps IRI text without validation. Query and N-Triples sources may
    /// carry IRIs verbatim (for instance placeholder references); such
    /// terms simply never match anything well-formed.
    pub fn raw(value: impl Into<String>) -> Self {
        Iri(value.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A blank node label, unique within one document's extraction scope.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlankNode(String);

impl BlankNode {
    pub fn new(label: impl Into<String>) -> Result<Self, ModelError> {
        let label = label.into();
        let mut chars = label.chars();
        let ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
            && chars.all(|c| c.is_ascii_alphanumeric());
        if ok {
            Ok(BlankNode(label))
        } else {
            Err(ModelError::InvalidBlankLabel(label))
        }
    }

    pub fn label(&self) -> &str {
        &self.0
    }
}

/// A typed literal. The datatype defaults to `xsd:string`; no language
/// tags.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    lexical: String,
    datatype: Iri,
}

impl Literal {
    pub fn new(lexical: impl Into<String>, datatype: Iri) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype,
        }
    }

    pub fn string(lexical: impl Into<String>) -> Self {
        Literal::new(lexical, Iri::raw(xsd::STRING))
    }

    pub fn date(lexical: impl Into<String>) -> Self {
        Literal::new(lexical, Iri::raw(xsd::DATE))
    }

    pub fn integer(lexical: impl Into<String>) -> Self {
        Literal::new(lexical, Iri::raw(xsd::INTEGER))
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> &Iri {
        &self.datatype
    }

    /// Whether this is a well-formed `xsd:date` (`YYYY-MM-DD`, valid
    /// calendar date).
    pub fn is_valid_date(&self) -> bool {
        self.datatype.as_str() == xsd::DATE && parse_date(&self.lexical).is_some()
    }
}

/// Subject position of a triple: an IRI or a blank node, never a literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subject {
    Iri(Iri),
    Blank(BlankNode),
}

impl Subject {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Subject::Iri(iri) => Some(iri),
            Subject::Blank(_) => None,
        }
    }
}

impl From<Iri> for Subject {
    fn from(iri: Iri) -> Self {
        Subject::Iri(iri)
    }
}

impl From<BlankNode> for Subject {
    fn from(b: BlankNode) -> Self {
        Subject::Blank(b)
    }
}

/// Any RDF term. Ordering is structural (IRIs, then blank nodes, then
/// literals) and exists to make set and index iteration deterministic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(Iri),
    Blank(BlankNode),
    Literal(Literal),
}

impl Term {
    pub fn as_subject(&self) -> Option<Subject> {
        match self {
            Term::Iri(iri) => Some(Subject::Iri(iri.clone())),
            Term::Blank(b) => Some(Subject::Blank(b.clone())),
            Term::Literal(_) => None,
        }
    }
}

impl From<Subject> for Term {
    fn from(s: Subject) -> Self {
        match s {
            Subject::Iri(iri) => Term::Iri(iri),
            Subject::Blank(b) => Term::Blank(b),
        }
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Self {
        Term::Iri(iri)
    }
}

impl From<Literal> for Term {
    fn from(l: Literal) -> Self {
        Term::Literal(l)
    }
}

/// A subject-predicate-object triple. The predicate is always an IRI.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Subject,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: impl Into<Subject>, predicate: Iri, object: impl Into<Term>) -> Self {
        Triple {
            subject: subject.into(),
            predicate,
            object: object.into(),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} .",
            serialize_term(&self.subject.clone().into()),
            serialize_term(&Term::Iri(self.predicate.clone())),
            serialize_term(&self.object)
        )
    }
}

/// Prefix-to-namespace map for CURIE expansion. The empty prefix is a
/// legal key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrefixMap {
    entries: std::collections::BTreeMap<String, Iri>,
}

impl PrefixMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, prefix: impl Into<String>, namespace: Iri) {
        self.entries.insert(prefix.into(), namespace);
    }

    pub fn get(&self, prefix: &str) -> Option<&Iri> {
        self.entries.get(prefix)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Iri)> {
        self.entries.iter().map(|(p, ns)| (p.as_str(), ns))
    }

    pub fn expand(&self, curie: &str) -> Result<Iri, ModelError> {
        expand_curie(curie, self)
    }
}

/// Expands `prefix:local` against the prefix map.
pub fn expand_curie(curie: &str, prefixes: &PrefixMap) -> Result<Iri, ModelError> {
    let colon = curie
        .find(':')
        .ok_or_else(|| ModelError::MalformedCurie(curie.to_string()))?;
    let (prefix, local) = (&curie[..colon], &curie[colon + 1..]);
    let namespace = prefixes
        .get(prefix)
        .ok_or_else(|| ModelError::UnknownPrefix(prefix.to_string()))?;
    Iri::new(format!("{}{}", namespace.as_str(), local))
}

/// Compares two terms, returning `None` when they are incomparable under
/// `<`/`>`.
///
/// Literals of one datatype compare chronologically (`xsd:date`),
/// numerically (`xsd:integer`, `xsd:decimal`) or by code point
/// (`xsd:string`). Structurally identical terms are always `Equal`. Every
/// other pairing — IRIs, blank nodes, cross-datatype or malformed
/// lexicals — is incomparable.
pub fn compare_terms(a: &Term, b: &Term) -> Option<Ordering> {
    if a == b {
        return Some(Ordering::Equal);
    }
    let (Term::Literal(la), Term::Literal(lb)) = (a, b) else {
        return None;
    };
    if la.datatype() != lb.datatype() {
        return None;
    }
    match la.datatype().as_str() {
        xsd::DATE => {
            let da = parse_date(la.lexical())?;
            let db = parse_date(lb.lexical())?;
            Some(da.cmp(&db))
        }
        xsd::INTEGER => compare_integers(la.lexical(), lb.lexical()),
        xsd::DECIMAL => compare_decimals(la.lexical(), lb.lexical()),
        xsd::STRING => Some(la.lexical().cmp(lb.lexical())),
        _ => None,
    }
}

/// Parses `YYYY-MM-DD`, checking calendar validity (month lengths, leap
/// years).
pub fn parse_date(lexical: &str) -> Option<(u32, u32, u32)> {
    let bytes = lexical.as_bytes();
    if bytes.len() != 10 || bytes[4] != b'-' || bytes[7] != b'-' {
        return None;
    }
    let year: u32 = lexical[0..4].parse().ok()?;
    let month: u32 = lexical[5..7].parse().ok()?;
    let day: u32 = lexical[8..10].parse().ok()?;
    if !lexical[0..4].bytes().all(|b| b.is_ascii_digit())
        || !lexical[5..7].bytes().all(|b| b.is_ascii_digit())
        || !lexical[8..10].bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    if !(1..=12).contains(&month) || day == 0 || day > days_in_month(year, month) {
        return None;
    }
    Some((year, month, day))
}

fn days_in_month(year: u32, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 => {
            let leap = year % 4 == 0 && (year % 100 != 0 || year % 400 == 0);
            if leap {
                29
            } else {
                28
            }
        }
        _ => 0,
    }
}

/// Sign, integer digits, fraction digits — the normal form both numeric
/// comparisons reduce to.
fn split_number(lexical: &str) -> Option<(bool, &str, &str)> {
    let (negative, rest) = match lexical.as_bytes().first()? {
        b'-' => (true, &lexical[1..]),
        b'+' => (false, &lexical[1..]),
        _ => (false, lexical),
    };
    let (int_part, frac_part) = match rest.find('.') {
        Some(dot) => (&rest[..dot], &rest[dot + 1..]),
        None => (rest, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    Some((negative, int_part, frac_part))
}

fn compare_integers(a: &str, b: &str) -> Option<Ordering> {
    let (na, ia, fa) = split_number(a)?;
    let (nb, ib, fb) = split_number(b)?;
    if !fa.is_empty() || !fb.is_empty() {
        return None; // not integer lexicals
    }
    Some(compare_split(na, ia, "", nb, ib, ""))
}

fn compare_decimals(a: &str, b: &str) -> Option<Ordering> {
    let (na, ia, fa) = split_number(a)?;
    let (nb, ib, fb) = split_number(b)?;
    Some(compare_split(na, ia, fa, nb, ib, fb))
}

/// Exact comparison of two sign/integer/fraction decompositions without
/// going through floating point.
fn compare_split(na: bool, ia: &str, fa: &str, nb: bool, ib: &str, fb: &str) -> Ordering {
    let ia = ia.trim_start_matches('0');
    let ib = ib.trim_start_matches('0');
    let fa = fa.trim_end_matches('0');
    let fb = fb.trim_end_matches('0');
    let zero_a = ia.is_empty() && fa.is_empty();
    let zero_b = ib.is_empty() && fb.is_empty();
    if zero_a && zero_b {
        return Ordering::Equal;
    }
    let sign_a = if zero_a { false } else { na };
    let sign_b = if zero_b { false } else { nb };
    match (sign_a, sign_b) {
        (false, true) => return Ordering::Greater,
        (true, false) => return Ordering::Less,
        _ => {}
    }
    let mag = compare_magnitude(ia, fa, ib, fb);
    if sign_a {
        mag.reverse()
    } else {
        mag
    }
}

fn compare_magnitude(ia: &str, fa: &str, ib: &str, fb: &str) -> Ordering {
    match ia.len().cmp(&ib.len()).then_with(|| ia.cmp(ib)) {
        Ordering::Equal => {}
        other => return other,
    }
    // integer parts equal; compare fractions left-padded to equal length
    let width = fa.len().max(fb.len());
    for i in 0..width {
        let da = fa.as_bytes().get(i).copied().unwrap_or(b'0');
        let db = fb.as_bytes().get(i).copied().unwrap_or(b'0');
        match da.cmp(&db) {
            Ordering::Equal => {}
            other => return other,
        }
    }
    Ordering::Equal
}

/// Renders a term in N-Triples syntax.
///
/// IRIs become `<...>`, blank nodes `_:label`, literals a quoted string
/// with `^^<datatype>` appended unless the datatype is `xsd:string`.
pub fn serialize_term(t: &Term) -> String {
    match t {
        Term::Iri(iri) => format!("<{}>", iri.as_str()),
        Term::Blank(b) => format!("_:{}", b.label()),
        Term::Literal(l) => {
            let escaped = escape_literal(l.lexical());
            if l.datatype().as_str() == xsd::STRING {
                format!("\"{}\"", escaped)
            } else {
                format!("\"{}\"^^<{}>", escaped, l.datatype().as_str())
            }
        }
    }
}

fn escape_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out
}

/// Parses one term in the grammar `serialize_term` produces. Returns the
/// term and the number of input bytes consumed.
pub fn parse_term(text: &str) -> Result<(Term, usize), ModelError> {
    let bytes = text.as_bytes();
    match bytes.first() {
        Some(b'<') => {
            let end = text
                .find('>')
                .ok_or_else(|| ModelError::InvalidTerm(text.to_string()))?;
            Ok((Term::Iri(Iri::raw(&text[1..end])), end + 1))
        }
        Some(b'_') => {
            if !text.starts_with("_:") {
                return Err(ModelError::InvalidTerm(text.to_string()));
            }
            let label_end = text[2..]
                .find(|c: char| !c.is_ascii_alphanumeric())
                .map(|i| i + 2)
                .unwrap_or(text.len());
            let node = BlankNode::new(&text[2..label_end])?;
            Ok((Term::Blank(node), label_end))
        }
        Some(b'"') => {
            let mut lexical = String::new();
            let mut chars = text.char_indices().skip(1);
            let mut close = None;
            while let Some((i, c)) = chars.next() {
                match c {
                    '"' => {
                        close = Some(i);
                        break;
                    }
                    '\\' => match chars.next() {
                        Some((_, 'n')) => lexical.push('\n'),
                        Some((_, 'r')) => lexical.push('\r'),
                        Some((_, 't')) => lexical.push('\t'),
                        Some((_, '"')) => lexical.push('"'),
                        Some((_, '\\')) => lexical.push('\\'),
                        _ => return Err(ModelError::InvalidTerm(text.to_string())),
                    },
                    _ => lexical.push(c),
                }
            }
            let close = close.ok_or_else(|| ModelError::InvalidTerm(text.to_string()))?;
            let after = &text[close + 1..];
            if let Some(rest) = after.strip_prefix("^^<") {
                let end = rest
                    .find('>')
                    .ok_or_else(|| ModelError::InvalidTerm(text.to_string()))?;
                let datatype = Iri::raw(&rest[..end]);
                Ok((
                    Term::Literal(Literal::new(lexical, datatype)),
                    close + 1 + 3 + end + 1,
                ))
            } else {
                Ok((Term::Literal(Literal::string(lexical)), close + 1))
            }
        }
        _ => Err(ModelError::InvalidTerm(text.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn listing_prefixes() -> PrefixMap {
        let mut p = PrefixMap::new();
        p.insert(
            "vm",
            Iri::new("http://www.sams-projekt.de/ontologies/VersionManagement#").unwrap(),
        );
        p.insert("xsd", Iri::new("http://www.w3.org/2001/XMLSchema#").unwrap());
        p
    }

    #[test]
    fn expand_curie_known_prefixes() {
        let p = listing_prefixes();
        assert_eq!(
            expand_curie("vm:responsible", &p).unwrap().as_str(),
            "http://www.sams-projekt.de/ontologies/VersionManagement#responsible"
        );
        assert_eq!(
            expand_curie("xsd:date", &p).unwrap().as_str(),
            "http://www.w3.org/2001/XMLSchema#date"
        );
    }

    #[test]
    fn expand_curie_unknown_prefix() {
        let p = PrefixMap::new();
        assert_eq!(
            expand_curie("zzz:x", &p),
            Err(ModelError::UnknownPrefix("zzz".into()))
        );
    }

    #[test]
    fn expand_curie_empty_prefix_is_legal() {
        let mut p = PrefixMap::new();
        p.insert("", Iri::new("http://ex.org/ns#").unwrap());
        assert_eq!(expand_curie(":x", &p).unwrap().as_str(), "http://ex.org/ns#x");
    }

    #[test]
    fn iri_validation() {
        assert!(Iri::new("http://a/b").is_ok());
        assert!(Iri::new("urn:x").is_ok());
        assert!(Iri::new("#frag").is_err());
        assert!(Iri::new("a/b:c").is_err());
        assert!(Iri::new("http://a b").is_err());
    }

    #[test]
    fn blank_label_grammar() {
        assert!(BlankNode::new("b1").is_ok());
        assert!(BlankNode::new("1b").is_err());
        assert!(BlankNode::new("").is_err());
        assert!(BlankNode::new("b_1").is_err());
    }

    #[test]
    fn date_comparison_is_chronological() {
        let later = Term::Literal(Literal::date("2009-06-01"));
        let earlier = Term::Literal(Literal::date("2009-01-01"));
        assert_eq!(compare_terms(&later, &earlier), Some(Ordering::Greater));
        assert_eq!(compare_terms(&earlier, &later), Some(Ordering::Less));
    }

    #[test]
    fn equal_terms_compare_equal() {
        let terms = [
            Term::Iri(Iri::raw("http://a/b")),
            Term::Blank(BlankNode::new("b1").unwrap()),
            Term::Literal(Literal::string("x")),
        ];
        for t in &terms {
            assert_eq!(compare_terms(t, t), Some(Ordering::Equal));
        }
    }

    #[test]
    fn cross_kind_is_incomparable() {
        let iri = Term::Iri(Iri::raw("http://a"));
        let int = Term::Literal(Literal::integer("5"));
        assert_eq!(compare_terms(&iri, &int), None);
        let date = Term::Literal(Literal::date("2009-01-01"));
        assert_eq!(compare_terms(&int, &date), None);
    }

    #[test]
    fn malformed_dates_are_incomparable() {
        let bad = Term::Literal(Literal::date("2009-02-30"));
        let good = Term::Literal(Literal::date("2009-01-01"));
        assert_eq!(compare_terms(&bad, &good), None);
        assert!(!Literal::date("2009-13-01").is_valid_date());
        assert!(Literal::date("2008-02-29").is_valid_date()); // leap year
        assert!(!Literal::date("2009-02-29").is_valid_date());
    }

    #[test]
    fn integer_and_decimal_comparison() {
        let cmp = |a: &Literal, b: &Literal| {
            compare_terms(&Term::Literal(a.clone()), &Term::Literal(b.clone()))
        };
        assert_eq!(
            cmp(&Literal::integer("10"), &Literal::integer("9")),
            Some(Ordering::Greater)
        );
        assert_eq!(
            cmp(&Literal::integer("-3"), &Literal::integer("2")),
            Some(Ordering::Less)
        );
        let dec = |s: &str| Literal::new(s, Iri::raw(xsd::DECIMAL));
        assert_eq!(cmp(&dec("3.10"), &dec("3.1")), Some(Ordering::Equal));
        assert_eq!(cmp(&dec("-0.5"), &dec("0.25")), Some(Ordering::Less));
        assert_eq!(cmp(&dec("-0"), &dec("0")), Some(Ordering::Equal));
        assert_eq!(cmp(&dec("10.01"), &dec("10.001")), Some(Ordering::Greater));
    }

    #[test]
    fn string_comparison_is_code_point_order() {
        let a = Term::Literal(Literal::string("Alice"));
        let b = Term::Literal(Literal::string("Bob"));
        assert_eq!(compare_terms(&a, &b), Some(Ordering::Less));
    }

    #[test]
    fn serialize_term_grammar() {
        assert_eq!(
            serialize_term(&Term::Iri(Iri::raw("http://a/b"))),
            "<http://a/b>"
        );
        assert_eq!(
            serialize_term(&Term::Literal(Literal::string("Pierre"))),
            "\"Pierre\""
        );
        assert_eq!(
            serialize_term(&Term::Literal(Literal::date("2009-01-01"))),
            "\"2009-01-01\"^^<http://www.w3.org/2001/XMLSchema#date>"
        );
        assert_eq!(
            serialize_term(&Term::Blank(BlankNode::new("b1").unwrap())),
            "_:b1"
        );
        assert_eq!(
            serialize_term(&Term::Literal(Literal::string("a\"b\\c\nd\te\r"))),
            "\"a\\\"b\\\\c\\nd\\te\\r\""
        );
    }

    #[test]
    fn parse_term_inverts_serialize() {
        let terms = [
            Term::Iri(Iri::raw("http://a/b#c")),
            Term::Blank(BlankNode::new("b12").unwrap()),
            Term::Literal(Literal::string("plain")),
            Term::Literal(Literal::string("quote \" slash \\ nl \n tab \t cr \r end")),
            Term::Literal(Literal::date("2009-01-01")),
            Term::Literal(Literal::integer("-42")),
        ];
        for t in &terms {
            let s = serialize_term(t);
            let (parsed, used) = parse_term(&s).unwrap();
            assert_eq!(&parsed, t);
            assert_eq!(used, s.len());
        }
    }
}
