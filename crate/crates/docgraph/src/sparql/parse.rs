//! Recursive-descent parser for the query subset.

use crate::model::{Iri, Literal, PrefixMap, Term, xsd};
use crate::sparql::{
    CompareOp, FilterExpr, GroupElement, GroupPattern, Operand, QueryError, SelectQuery,
};
use crate::store::{PatternTerm, TriplePattern};
use crate::vocab;
use crate::xml::Position;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    PName(String),
    IriRef(String),
    Var(String),
    Str(String),
    DtSep,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Comma,
    Dot,
    Op(CompareOp),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    position: Position,
}

/// Parses a SELECT query. The prefix map is seeded with the built-in
/// vocabulary declarations, so queries may use prefixes like `foaf:`
/// without redeclaring them; a PREFIX line overrides the default.
pub fn parse_query(text: &str) -> Result<SelectQuery, QueryError> {
    let tokens = tokenize(text)?;
    let mut parser = QueryParser {
        tokens,
        index: 0,
        prefixes: vocab::builtin_registry().prefixes().clone(),
        end: last_position(text),
    };
    parser.parse()
}

fn last_position(text: &str) -> Position {
    let line = text.lines().count().max(1);
    let column = text.lines().last().map(|l| l.chars().count()).unwrap_or(0) + 1;
    Position { line, column }
}

fn tokenize(text: &str) -> Result<Vec<Token>, QueryError> {
    let mut tokens = Vec::new();
    let mut chars: Vec<char> = text.chars().collect();
    chars.push('\n'); // sentinel simplifies lookahead
    let mut i = 0;
    let mut line = 1;
    let mut column = 1;

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() - 1 {
        let position = Position { line, column };
        let c = chars[i];
        match c {
            '#' => {
                while i < chars.len() - 1 && chars[i] != '\n' {
                    bump!();
                }
            }
            c if c.is_whitespace() => {
                bump!();
            }
            '{' => {
                tokens.push(Token { tok: Tok::LBrace, position });
                bump!();
            }
            '}' => {
                tokens.push(Token { tok: Tok::RBrace, position });
                bump!();
            }
            '(' => {
                tokens.push(Token { tok: Tok::LParen, position });
                bump!();
            }
            ')' => {
                tokens.push(Token { tok: Tok::RParen, position });
                bump!();
            }
            ';' => {
                tokens.push(Token { tok: Tok::Semi, position });
                bump!();
            }
            ',' => {
                tokens.push(Token { tok: Tok::Comma, position });
                bump!();
            }
            '.' => {
                tokens.push(Token { tok: Tok::Dot, position });
                bump!();
            }
            '=' => {
                tokens.push(Token { tok: Tok::Op(CompareOp::Equal), position });
                bump!();
            }
            '!' => {
                bump!();
                if chars[i] == '=' {
                    bump!();
                    tokens.push(Token { tok: Tok::Op(CompareOp::NotEqual), position });
                } else {
                    return Err(QueryError::Syntax {
                        position,
                        message: "expected '=' after '!'".into(),
                    });
                }
            }
            '>' => {
                bump!();
                if chars[i] == '=' {
                    bump!();
                    tokens.push(Token { tok: Tok::Op(CompareOp::GreaterOrEqual), position });
                } else {
                    tokens.push(Token { tok: Tok::Op(CompareOp::Greater), position });
                }
            }
            '<' => {
                // An IRI reference if a '>' closes it before whitespace,
                // otherwise the less-than operator.
                let mut j = i + 1;
                let mut iri_end = None;
                while j < chars.len() - 1 && !chars[j].is_whitespace() && chars[j] != '<' {
                    if chars[j] == '>' {
                        iri_end = Some(j);
                        break;
                    }
                    j += 1;
                }
                if let Some(end) = iri_end {
                    let iri: String = chars[i + 1..end].iter().collect();
                    while i <= end {
                        bump!();
                    }
                    tokens.push(Token { tok: Tok::IriRef(iri), position });
                } else {
                    bump!();
                    if chars[i] == '=' {
                        bump!();
                        tokens.push(Token { tok: Tok::Op(CompareOp::LessOrEqual), position });
                    } else {
                        tokens.push(Token { tok: Tok::Op(CompareOp::Less), position });
                    }
                }
            }
            '^' => {
                bump!();
                if chars[i] == '^' {
                    bump!();
                    tokens.push(Token { tok: Tok::DtSep, position });
                } else {
                    return Err(QueryError::Syntax {
                        position,
                        message: "expected '^^'".into(),
                    });
                }
            }
            '?' => {
                bump!();
                let mut name = String::new();
                while chars[i].is_ascii_alphanumeric() || chars[i] == '_' {
                    name.push(chars[i]);
                    bump!();
                }
                if name.is_empty() || !name.chars().next().unwrap().is_ascii_alphabetic() {
                    return Err(QueryError::Syntax {
                        position,
                        message: "invalid variable name".into(),
                    });
                }
                tokens.push(Token { tok: Tok::Var(name), position });
            }
            '"' => {
                bump!();
                let mut value = String::new();
                loop {
                    if i >= chars.len() - 1 {
                        return Err(QueryError::Syntax {
                            position,
                            message: "unterminated string literal".into(),
                        });
                    }
                    match chars[i] {
                        '"' => {
                            bump!();
                            break;
                        }
                        '\\' => {
                            bump!();
                            let escaped = match chars[i] {
                                'n' => '\n',
                                't' => '\t',
                                'r' => '\r',
                                '"' => '"',
                                '\\' => '\\',
                                other => {
                                    return Err(QueryError::Syntax {
                                        position,
                                        message: format!("unknown escape '\\{}'", other),
                                    })
                                }
                            };
                            value.push(escaped);
                            bump!();
                        }
                        c => {
                            value.push(c);
                            bump!();
                        }
                    }
                }
                tokens.push(Token { tok: Tok::Str(value), position });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                while chars[i].is_ascii_alphanumeric()
                    || matches!(chars[i], '_' | '-' | '.')
                {
                    word.push(chars[i]);
                    bump!();
                }
                if chars[i] == ':' {
                    bump!();
                    let mut local = String::new();
                    while chars[i].is_ascii_alphanumeric()
                        || matches!(chars[i], '_' | '-' | '.' | '#' | '/')
                    {
                        local.push(chars[i]);
                        bump!();
                    }
                    // a trailing dot terminates the pattern, it is not
                    // part of the local name
                    let mut dots = 0;
                    while local.ends_with('.') {
                        local.pop();
                        dots += 1;
                    }
                    tokens.push(Token {
                        tok: Tok::PName(format!("{}:{}", word, local)),
                        position,
                    });
                    for _ in 0..dots {
                        tokens.push(Token { tok: Tok::Dot, position });
                    }
                } else {
                    tokens.push(Token { tok: Tok::Name(word), position });
                }
            }
            ':' => {
                // PName with the empty prefix
                bump!();
                let mut local = String::new();
                while chars[i].is_ascii_alphanumeric()
                    || matches!(chars[i], '_' | '-' | '.' | '#' | '/')
                {
                    local.push(chars[i]);
                    bump!();
                }
                let mut dots = 0;
                while local.ends_with('.') {
                    local.pop();
                    dots += 1;
                }
                tokens.push(Token { tok: Tok::PName(format!(":{}", local)), position });
                for _ in 0..dots {
                    tokens.push(Token { tok: Tok::Dot, position });
                }
            }
            other => {
                return Err(QueryError::Syntax {
                    position,
                    message: format!("unexpected character '{}'", other),
                });
            }
        }
    }
    Ok(tokens)
}

struct QueryParser {
    tokens: Vec<Token>,
    index: usize,
    prefixes: PrefixMap,
    end: Position,
}

impl QueryParser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.index).map(|t| &t.tok)
    }

    fn position(&self) -> Position {
        self.tokens
            .get(self.index)
            .map(|t| t.position)
            .unwrap_or(self.end)
    }

    fn advance(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.index).cloned();
        if t.is_some() {
            self.index += 1;
        }
        t
    }

    fn syntax_error<T>(&self, message: impl Into<String>) -> Result<T, QueryError> {
        Err(QueryError::Syntax {
            position: self.position(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), QueryError> {
        if self.peek() == Some(&tok) {
            self.advance();
            Ok(())
        } else {
            self.syntax_error(format!("expected {}", what))
        }
    }

    fn keyword(&mut self, word: &str) -> bool {
        if let Some(Tok::Name(name)) = self.peek() {
            if name.eq_ignore_ascii_case(word) {
                self.advance();
                return true;
            }
        }
        false
    }

    fn parse(&mut self) -> Result<SelectQuery, QueryError> {
        while self.keyword("PREFIX") {
            self.parse_prefix_decl()?;
        }
        if !self.keyword("SELECT") {
            return self.syntax_error("expected SELECT");
        }
        let mut projection = Vec::new();
        while let Some(Tok::Var(_)) = self.peek() {
            if let Some(Token { tok: Tok::Var(v), .. }) = self.advance() {
                projection.push(v);
            }
        }
        if projection.is_empty() {
            return self.syntax_error("SELECT needs at least one variable");
        }
        if !self.keyword("WHERE") {
            return self.syntax_error("expected WHERE");
        }
        let pattern = self.parse_group()?;
        if self.peek().is_some() {
            return self.syntax_error("unexpected input after query");
        }
        let bound = pattern.binding_variables();
        for var in &projection {
            if !bound.contains(var) {
                return Err(QueryError::Syntax {
                    position: self.end,
                    message: format!("projected variable ?{} never occurs in the pattern", var),
                });
            }
        }
        Ok(SelectQuery {
            prefixes: self.prefixes.clone(),
            projection,
            pattern,
        })
    }

    fn parse_prefix_decl(&mut self) -> Result<(), QueryError> {
        let position = self.position();
        let name = match self.advance() {
            Some(Token { tok: Tok::PName(p), .. }) => p,
            _ => {
                return Err(QueryError::Syntax {
                    position,
                    message: "expected a prefix name ending in ':'".into(),
                })
            }
        };
        let Some(prefix) = name.strip_suffix(':') else {
            return Err(QueryError::Syntax {
                position,
                message: "prefix declaration must end in ':'".into(),
            });
        };
        match self.advance() {
            Some(Token { tok: Tok::IriRef(iri), .. }) => {
                self.prefixes.insert(prefix, Iri::raw(iri));
                Ok(())
            }
            _ => Err(QueryError::Syntax {
                position,
                message: "expected <iri> after prefix name".into(),
            }),
        }
    }

    fn expand_pname(&self, pname: &str, position: Position) -> Result<Iri, QueryError> {
        let colon = pname.find(':').expect("pname always has a colon");
        let prefix = &pname[..colon];
        match self.prefixes.get(prefix) {
            Some(ns) => Ok(Iri::raw(format!("{}{}", ns.as_str(), &pname[colon + 1..]))),
            None => Err(QueryError::UnknownPrefix {
                position,
                prefix: prefix.to_string(),
            }),
        }
    }

    fn parse_group(&mut self) -> Result<GroupPattern, QueryError> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut elements = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::RBrace) => {
                    self.advance();
                    break;
                }
                Some(Tok::LBrace) => {
                    let left = self.parse_group()?;
                    if !self.keyword("UNION") {
                        return self.syntax_error("expected UNION between groups");
                    }
                    let right = self.parse_group()?;
                    elements.push(GroupElement::Union(left, right));
                }
                Some(Tok::Name(n)) if n.eq_ignore_ascii_case("FILTER") => {
                    self.advance();
                    elements.push(GroupElement::Filter(self.parse_filter()?));
                }
                Some(_) => {
                    self.parse_triples_block(&mut elements)?;
                }
                None => return self.syntax_error("unterminated group, expected '}'"),
            }
        }
        if elements.is_empty() {
            return self.syntax_error("empty group pattern");
        }
        Ok(GroupPattern { elements })
    }

    fn parse_filter(&mut self) -> Result<FilterExpr, QueryError> {
        self.expect(Tok::LParen, "'(' after FILTER")?;
        let lhs = self.parse_operand()?;
        let op = match self.advance() {
            Some(Token { tok: Tok::Op(op), .. }) => op,
            _ => return self.syntax_error("expected a comparison operator"),
        };
        let rhs = self.parse_operand()?;
        self.expect(Tok::RParen, "')' after filter expression")?;
        let expr = FilterExpr { op, lhs, rhs };
        if expr.variables().next().is_none() {
            return self.syntax_error("filter must reference at least one variable");
        }
        Ok(expr)
    }

    fn parse_operand(&mut self) -> Result<Operand, QueryError> {
        let position = self.position();
        match self.advance().map(|t| t.tok) {
            Some(Tok::Var(v)) => Ok(Operand::Var(v)),
            Some(Tok::IriRef(iri)) => Ok(Operand::Term(Term::Iri(Iri::raw(iri)))),
            Some(Tok::PName(p)) => Ok(Operand::Term(Term::Iri(self.expand_pname(&p, position)?))),
            Some(Tok::Str(s)) => Ok(Operand::Term(Term::Literal(self.parse_literal_tail(s)?))),
            _ => Err(QueryError::Syntax {
                position,
                message: "expected a variable or term".into(),
            }),
        }
    }

    /// Datatype suffix after a string token, if any.
    fn parse_literal_tail(&mut self, lexical: String) -> Result<Literal, QueryError> {
        if self.peek() == Some(&Tok::DtSep) {
            self.advance();
            let position = self.position();
            let datatype = match self.advance().map(|t| t.tok) {
                Some(Tok::IriRef(iri)) => Iri::raw(iri),
                Some(Tok::PName(p)) => self.expand_pname(&p, position)?,
                _ => {
                    return Err(QueryError::Syntax {
                        position,
                        message: "expected a datatype after '^^'".into(),
                    })
                }
            };
            Ok(Literal::new(lexical, datatype))
        } else {
            Ok(Literal::new(lexical, Iri::raw(xsd::STRING)))
        }
    }

    fn parse_subject(&mut self) -> Result<PatternTerm, QueryError> {
        let position = self.position();
        match self.advance().map(|t| t.tok) {
            Some(Tok::Var(v)) => Ok(PatternTerm::Var(v)),
            Some(Tok::IriRef(iri)) => Ok(PatternTerm::Term(Term::Iri(Iri::raw(iri)))),
            Some(Tok::PName(p)) => Ok(PatternTerm::Term(Term::Iri(
                self.expand_pname(&p, position)?,
            ))),
            _ => Err(QueryError::Syntax {
                position,
                message: "expected a subject (variable, IRI or prefixed name)".into(),
            }),
        }
    }

    fn parse_object(&mut self) -> Result<PatternTerm, QueryError> {
        let position = self.position();
        match self.advance().map(|t| t.tok) {
            Some(Tok::Var(v)) => Ok(PatternTerm::Var(v)),
            Some(Tok::IriRef(iri)) => Ok(PatternTerm::Term(Term::Iri(Iri::raw(iri)))),
            Some(Tok::PName(p)) => Ok(PatternTerm::Term(Term::Iri(
                self.expand_pname(&p, position)?,
            ))),
            Some(Tok::Str(s)) => Ok(PatternTerm::Term(Term::Literal(
                self.parse_literal_tail(s)?,
            ))),
            _ => Err(QueryError::Syntax {
                position,
                message: "expected an object (variable, IRI, prefixed name or literal)".into(),
            }),
        }
    }

    fn parse_triples_block(
        &mut self,
        elements: &mut Vec<GroupElement>,
    ) -> Result<(), QueryError> {
        let subject = self.parse_subject()?;
        loop {
            let verb = self.parse_subject().map_err(|e| match e {
                QueryError::Syntax { position, .. } => QueryError::Syntax {
                    position,
                    message: "expected a predicate (variable, IRI or prefixed name)".into(),
                },
                other => other,
            })?;
            loop {
                let object = self.parse_object()?;
                elements.push(GroupElement::Pattern(TriplePattern {
                    subject: subject.clone(),
                    predicate: verb.clone(),
                    object,
                }));
                if self.peek() == Some(&Tok::Comma) {
                    self.advance();
                    continue;
                }
                break;
            }
            if self.peek() == Some(&Tok::Semi) {
                self.advance();
                continue;
            }
            break;
        }
        if self.peek() == Some(&Tok::Dot) {
            self.advance();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_query() {
        let q = parse_query("SELECT ?s WHERE { ?s ?p ?o }").unwrap();
        assert_eq!(q.projection, vec!["s"]);
        assert_eq!(q.pattern.elements.len(), 1);
    }

    #[test]
    fn malformed_pattern_is_rejected() {
        let err = parse_query("SELECT ?s WHERE { ?s ?p }").unwrap_err();
        assert!(matches!(err, QueryError::Syntax { .. }), "{err}");
    }

    #[test]
    fn semicolon_and_comma_abbreviations() {
        let q = parse_query(
            "PREFIX ex: <http://ex.org/>\n\
             SELECT ?a ?b WHERE { ?a ex:p ?b ; ex:q ?b , \"lit\" . }",
        )
        .unwrap();
        assert_eq!(q.pattern.elements.len(), 3);
        let GroupElement::Pattern(last) = &q.pattern.elements[2] else {
            panic!("expected a pattern");
        };
        assert_eq!(last.subject, PatternTerm::Var("a".into()));
        assert_eq!(
            last.predicate,
            PatternTerm::Term(Term::Iri(Iri::raw("http://ex.org/q")))
        );
    }

    #[test]
    fn union_and_filter() {
        let q = parse_query(
            "PREFIX ex: <http://ex.org/>\n\
             SELECT ?x WHERE {\n\
               { ?x ex:a ?y } UNION { ?x ex:b ?y }\n\
               FILTER (?y > \"5\"^^xsd:integer)\n\
             }",
        )
        .unwrap();
        assert_eq!(q.pattern.elements.len(), 2);
        assert!(matches!(q.pattern.elements[0], GroupElement::Union(_, _)));
        assert!(matches!(q.pattern.elements[1], GroupElement::Filter(_)));
    }

    #[test]
    fn builtin_prefixes_are_preseeded() {
        let q = parse_query("SELECT ?n WHERE { ?p foaf:name ?n }").unwrap();
        let GroupElement::Pattern(p) = &q.pattern.elements[0] else {
            panic!();
        };
        assert_eq!(
            p.predicate,
            PatternTerm::Term(Term::Iri(Iri::raw("http://xmlns.com/foaf/0.1/name")))
        );
    }

    #[test]
    fn unknown_prefix_is_reported() {
        let err = parse_query("SELECT ?s WHERE { ?s zzz:p ?o }").unwrap_err();
        assert!(matches!(err, QueryError::UnknownPrefix { ref prefix, .. } if prefix == "zzz"));
    }

    #[test]
    fn unprojectable_variable_is_rejected() {
        let err = parse_query("SELECT ?q WHERE { ?s ?p ?o }").unwrap_err();
        assert!(err.to_string().contains("?q"), "{err}");
    }

    #[test]
    fn filter_needs_a_variable() {
        let err =
            parse_query("SELECT ?s WHERE { ?s ?p ?o FILTER (\"a\" = \"b\") }").unwrap_err();
        assert!(err.to_string().contains("variable"), "{err}");
    }

    #[test]
    fn comments_and_positions() {
        let err = parse_query("# comment\nSELECT ?s WHERE { ?s ?p\n  .\n}").unwrap_err();
        let QueryError::Syntax { position, .. } = err else {
            panic!();
        };
        assert_eq!(position.line, 3);
    }

    #[test]
    fn comparison_operators_tokenize_next_to_iris() {
        for op in ["<", ">", "<=", ">=", "=", "!="] {
            let text = format!(
                "SELECT ?s WHERE {{ ?s <http://ex.org/p> ?o FILTER (?o {} \"x\") }}",
                op
            );
            parse_query(&text).unwrap_or_else(|e| panic!("op {}: {}", op, e));
        }
    }
}
