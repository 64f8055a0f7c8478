//! A small well-formedness-checking XML parser.
//!
//! Produces an element tree with source positions and keeps `xmlns:*`
//! attributes as ordinary attributes, which is what the annotation
//! extractor wants to see. Only the five predefined entities (plus
//! numeric character references) are expanded; DOCTYPE declarations are
//! rejected.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// 1-based line/column source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{position}: {message}")]
pub struct XmlError {
    pub position: Position,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XmlNode {
    Element(XmlElement),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlElement {
    pub name: String,
    pub attributes: BTreeMap<String, String>,
    pub children: Vec<XmlNode>,
    pub position: Position,
}

impl XmlElement {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes.get(name).map(String::as_str)
    }

    pub fn child_elements(&self) -> impl Iterator<Item = &XmlElement> {
        self.children.iter().filter_map(|c| match c {
            XmlNode::Element(e) => Some(e),
            XmlNode::Text(_) => None,
        })
    }

    /// Concatenated text of all descendant text nodes, document order.
    pub fn text_content(&self) -> String {
        let mut out = String::new();
        self.collect_text(&mut out);
        out
    }

    fn collect_text(&self, out: &mut String) {
        for child in &self.children {
            match child {
                XmlNode::Text(t) => out.push_str(t),
                XmlNode::Element(e) => e.collect_text(out),
            }
        }
    }
}

/// Parses a complete XML document into its root element.
pub fn parse_xml(input: &str) -> Result<XmlElement, XmlError> {
    let mut parser = Parser::new(input);
    parser.skip_prolog()?;
    let root = parser.parse_element()?;
    parser.skip_misc()?;
    if !parser.at_end() {
        return Err(parser.error("content after document root"));
    }
    Ok(root)
}

struct Parser<'a> {
    input: &'a str,
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Parser<'a> {
    fn new(input: &'a str) -> Self {
        Parser {
            input,
            pos: 0,
            line: 1,
            column: 1,
        }
    }

    fn position(&self) -> Position {
        Position {
            line: self.line,
            column: self.column,
        }
    }

    fn error(&self, message: impl Into<String>) -> XmlError {
        XmlError {
            position: self.position(),
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.input[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.input.len()
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn eat(&mut self, expected: char) -> Result<(), XmlError> {
        match self.peek() {
            Some(c) if c == expected => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected '{}', found '{}'", expected, c))),
            None => Err(self.error(format!("expected '{}', found end of input", expected))),
        }
    }

    fn eat_str(&mut self, expected: &str) -> bool {
        if self.rest().starts_with(expected) {
            for _ in 0..expected.chars().count() {
                self.bump();
            }
            true
        } else {
            false
        }
    }

    fn skip_whitespace(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn skip_comment(&mut self) -> Result<bool, XmlError> {
        if !self.rest().starts_with("<!--") {
            return Ok(false);
        }
        let start = self.position();
        self.eat_str("<!--");
        loop {
            if self.eat_str("-->") {
                return Ok(true);
            }
            if self.bump().is_none() {
                return Err(XmlError {
                    position: start,
                    message: "unterminated comment".into(),
                });
            }
        }
    }

    fn skip_pi(&mut self) -> Result<bool, XmlError> {
        if !self.rest().starts_with("<?") {
            return Ok(false);
        }
        let start = self.position();
        self.eat_str("<?");
        loop {
            if self.eat_str("?>") {
                return Ok(true);
            }
            if self.bump().is_none() {
                return Err(XmlError {
                    position: start,
                    message: "unterminated processing instruction".into(),
                });
            }
        }
    }

    fn skip_prolog(&mut self) -> Result<(), XmlError> {
        loop {
            self.skip_whitespace();
            if self.rest().starts_with("<!DOCTYPE") {
                return Err(self.error("DOCTYPE declarations are not supported"));
            }
            if self.skip_pi()? || self.skip_comment()? {
                continue;
            }
            return Ok(());
        }
    }

    fn skip_misc(&mut self) -> Result<(), XmlError> {
        loop {
            self.skip_whitespace();
            if self.skip_pi()? || self.skip_comment()? {
                continue;
            }
            return Ok(());
        }
    }

    fn is_name_char(c: char, first: bool) -> bool {
        if first {
            c.is_alphabetic() || c == '_' || c == ':'
        } else {
            c.is_alphanumeric() || matches!(c, '_' | ':' | '-' | '.')
        }
    }

    fn parse_name(&mut self) -> Result<String, XmlError> {
        let mut name = String::new();
        match self.peek() {
            Some(c) if Self::is_name_char(c, true) => {
                name.push(c);
                self.bump();
            }
            _ => return Err(self.error("expected a name")),
        }
        while matches!(self.peek(), Some(c) if Self::is_name_char(c, false)) {
            name.push(self.peek().unwrap());
            self.bump();
        }
        Ok(name)
    }

    fn parse_entity(&mut self) -> Result<char, XmlError> {
        let start = self.position();
        self.eat('&')?;
        let mut entity = String::new();
        loop {
            match self.bump() {
                Some(';') => break,
                Some(c) if entity.len() < 12 => entity.push(c),
                _ => {
                    return Err(XmlError {
                        position: start,
                        message: "unterminated entity reference".into(),
                    })
                }
            }
        }
        let resolved = match entity.as_str() {
            "amp" => Some('&'),
            "lt" => Some('<'),
            "gt" => Some('>'),
            "quot" => Some('"'),
            "apos" => Some('\''),
            _ => {
                if let Some(hex) = entity.strip_prefix("#x") {
                    u32::from_str_radix(hex, 16).ok().and_then(char::from_u32)
                } else if let Some(dec) = entity.strip_prefix('#') {
                    dec.parse::<u32>().ok().and_then(char::from_u32)
                } else {
                    None
                }
            }
        };
        resolved.ok_or(XmlError {
            position: start,
            message: format!("unknown entity '&{};'", entity),
        })
    }

    fn parse_attribute_value(&mut self) -> Result<String, XmlError> {
        let quote = match self.peek() {
            Some(q @ ('"' | '\'')) => q,
            _ => return Err(self.error("expected quoted attribute value")),
        };
        self.bump();
        let mut value = String::new();
        loop {
            match self.peek() {
                Some(c) if c == quote => {
                    self.bump();
                    return Ok(value);
                }
                Some('&') => value.push(self.parse_entity()?),
                Some('<') => return Err(self.error("'<' is not allowed in attribute values")),
                Some(c) => {
                    value.push(c);
                    self.bump();
                }
                None => return Err(self.error("unterminated attribute value")),
            }
        }
    }

    fn parse_element(&mut self) -> Result<XmlElement, XmlError> {
        let position = self.position();
        self.eat('<')?;
        let name = self.parse_name()?;
        let mut attributes = BTreeMap::new();
        loop {
            self.skip_whitespace();
            match self.peek() {
                Some('/') => {
                    self.bump();
                    self.eat('>')?;
                    return Ok(XmlElement {
                        name,
                        attributes,
                        children: Vec::new(),
                        position,
                    });
                }
                Some('>') => {
                    self.bump();
                    break;
                }
                Some(c) if Self::is_name_char(c, true) => {
                    let attr_pos = self.position();
                    let attr_name = self.parse_name()?;
                    self.skip_whitespace();
                    self.eat('=')?;
                    self.skip_whitespace();
                    let value = self.parse_attribute_value()?;
                    if attributes.insert(attr_name.clone(), value).is_some() {
                        return Err(XmlError {
                            position: attr_pos,
                            message: format!("duplicate attribute '{}'", attr_name),
                        });
                    }
                }
                Some(c) => return Err(self.error(format!("unexpected '{}' in tag", c))),
                None => {
                    return Err(XmlError {
                        position,
                        message: format!("unclosed tag <{}>", name),
                    })
                }
            }
        }
        let children = self.parse_children(&name, position)?;
        Ok(XmlElement {
            name,
            attributes,
            children,
            position,
        })
    }

    fn parse_children(
        &mut self,
        parent: &str,
        open_pos: Position,
    ) -> Result<Vec<XmlNode>, XmlError> {
        let mut children = Vec::new();
        let mut text = String::new();
        loop {
            match self.peek() {
                None => {
                    return Err(XmlError {
                        position: open_pos,
                        message: format!("unclosed element <{}>", parent),
                    })
                }
                Some('<') => {
                    if self.rest().starts_with("</") {
                        if !text.is_empty() {
                            children.push(XmlNode::Text(std::mem::take(&mut text)));
                        }
                        self.eat_str("</");
                        let close_pos = self.position();
                        let close_name = self.parse_name()?;
                        if close_name != parent {
                            return Err(XmlError {
                                position: close_pos,
                                message: format!(
                                    "mismatched closing tag </{}>, expected </{}>",
                                    close_name, parent
                                ),
                            });
                        }
                        self.skip_whitespace();
                        self.eat('>')?;
                        return Ok(children);
                    }
                    if self.rest().starts_with("<![CDATA[") {
                        self.eat_str("<![CDATA[");
                        let cdata_pos = self.position();
                        loop {
                            if self.eat_str("]]>") {
                                break;
                            }
                            match self.bump() {
                                Some(c) => text.push(c),
                                None => {
                                    return Err(XmlError {
                                        position: cdata_pos,
                                        message: "unterminated CDATA section".into(),
                                    })
                                }
                            }
                        }
                        continue;
                    }
                    if self.skip_comment()? || self.skip_pi()? {
                        continue;
                    }
                    if !text.is_empty() {
                        children.push(XmlNode::Text(std::mem::take(&mut text)));
                    }
                    children.push(XmlNode::Element(self.parse_element()?));
                }
                Some('&') => text.push(self.parse_entity()?),
                Some(c) => {
                    text.push(c);
                    self.bump();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document() {
        let root = parse_xml("<div/>").unwrap();
        assert_eq!(root.name, "div");
        assert!(root.children.is_empty());
        assert!(root.attributes.is_empty());
    }

    #[test]
    fn nested_children() {
        let root = parse_xml("<a><b/><b/></a>").unwrap();
        assert_eq!(root.child_elements().count(), 2);
    }

    #[test]
    fn unclosed_tag_is_an_error() {
        let err = parse_xml("<a><b></a>").unwrap_err();
        assert!(err.message.contains("mismatched"), "{}", err);
        assert!(parse_xml("<a>").is_err());
        assert!(parse_xml("<a").is_err());
    }

    #[test]
    fn attributes_and_positions() {
        let root = parse_xml("<doc>\n  <item id=\"x\" class='y'/>\n</doc>").unwrap();
        let item = root.child_elements().next().unwrap();
        assert_eq!(item.attr("id"), Some("x"));
        assert_eq!(item.attr("class"), Some("y"));
        assert_eq!(item.position, Position { line: 2, column: 3 });
    }

    #[test]
    fn xmlns_attributes_are_preserved() {
        let root = parse_xml(r#"<r xmlns:p="http://ex.org/ns#"/>"#).unwrap();
        assert_eq!(root.attr("xmlns:p"), Some("http://ex.org/ns#"));
    }

    #[test]
    fn duplicate_attribute_rejected() {
        assert!(parse_xml(r#"<a x="1" x="2"/>"#).is_err());
    }

    #[test]
    fn predefined_entities_and_char_refs() {
        let root = parse_xml("<a t=\"&lt;&amp;&quot;\">&gt;&apos;&#65;&#x42;</a>").unwrap();
        assert_eq!(root.attr("t"), Some("<&\""));
        assert_eq!(root.text_content(), ">'AB");
    }

    #[test]
    fn unknown_entity_rejected() {
        let err = parse_xml("<a>&nbsp;</a>").unwrap_err();
        assert!(err.message.contains("nbsp"));
    }

    #[test]
    fn doctype_rejected() {
        assert!(parse_xml("<!DOCTYPE html><html/>").is_err());
    }

    #[test]
    fn prolog_comments_and_declaration() {
        let doc = "<?xml version=\"1.0\"?>\n<!-- head -->\n<root>text</root>\n<!-- tail -->\n";
        let root = parse_xml(doc).unwrap();
        assert_eq!(root.text_content(), "text");
    }

    #[test]
    fn cdata_is_plain_text() {
        let root = parse_xml("<a><![CDATA[<not&markup>]]></a>").unwrap();
        assert_eq!(root.text_content(), "<not&markup>");
    }

    #[test]
    fn content_after_root_rejected() {
        assert!(parse_xml("<a/><b/>").is_err());
    }
}
