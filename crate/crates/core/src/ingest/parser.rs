//! Recursive-descent parser for the egypt dot subset.
//!
//! ```text
//! graph       ::= "digraph" "callgraph" "{" graph_descr "}"
//! graph_descr ::= id ";" graph_descr
//!               | id "-" ">" id [style_descr | ";"] graph_descr
//!               | style_descr graph_descr
//!               | ε
//! style_descr ::= "[" "style" "=" style "]" ";"
//! style       ::= "solid" | "dotted"
//! id          ::= '"' underscores ident '"'
//! underscores ::= "_" underscores | ε
//! ```
//!
//! egypt always emits a style descriptor after an edge. An edge without one
//! is accepted with a warning and recorded as [`EdgeStyle::Unspecified`].

use std::fmt::{self, Write as _};

use thiserror::Error;

use super::token::{Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeStyle {
    /// Direct call.
    Solid,
    /// Indirect reference (address taken).
    Dotted,
    Unspecified,
}

impl EdgeStyle {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeStyle::Solid => "solid",
            EdgeStyle::Dotted => "dotted",
            EdgeStyle::Unspecified => "unspecified",
        }
    }

    pub(crate) fn to_byte(self) -> u8 {
        match self {
            EdgeStyle::Solid => 0,
            EdgeStyle::Dotted => 1,
            EdgeStyle::Unspecified => 2,
        }
    }

    pub(crate) fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(EdgeStyle::Solid),
            1 => Some(EdgeStyle::Dotted),
            2 => Some(EdgeStyle::Unspecified),
            _ => None,
        }
    }
}

impl fmt::Display for EdgeStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One `caller -> callee` statement of a dump, stamped with its file tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawEdge {
    pub source: String,
    pub dest: String,
    pub style: EdgeStyle,
    pub file: String,
}

impl RawEdge {
    pub fn new(source: &str, dest: &str, style: EdgeStyle, file: &str) -> Self {
        RawEdge {
            source: source.to_owned(),
            dest: dest.to_owned(),
            style,
            file: file.to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

/// Edges of one file plus positions of edges that lacked a style descriptor.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedFile {
    pub edges: Vec<RawEdge>,
    pub missing_style: Vec<(u32, u32)>,
}

/// Parses a token stream and returns the edges in document order.
pub fn parse_eg(tokens: &[Token], file: &str) -> Result<Vec<RawEdge>, ParseError> {
    parse_eg_detailed(tokens, file).map(|parsed| parsed.edges)
}

pub fn parse_eg_detailed(tokens: &[Token], file: &str) -> Result<ParsedFile, ParseError> {
    let mut parser = Parser {
        tokens,
        pos: 0,
        file,
        out: ParsedFile::default(),
    };
    parser.graph()?;
    for &(line, column) in &parser.out.missing_style {
        log::warn!("{file}:{line}:{column}: edge without style descriptor");
    }
    Ok(parser.out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    file: &'a str,
    out: ParsedFile,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn peek_is(&self, kind: TokenKind, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is(kind, text))
    }

    fn error_here(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(tok) => ParseError {
                line: tok.line,
                column: tok.column,
                message: format!("expected {expected}, found {tok}"),
            },
            None => {
                let (line, column) = self
                    .tokens
                    .last()
                    .map(|t| (t.line, t.column + t.text.len() as u32))
                    .unwrap_or((1, 1));
                ParseError {
                    line,
                    column,
                    message: format!("expected {expected}, found end of input"),
                }
            }
        }
    }

    fn expect(&mut self, kind: TokenKind, text: &str) -> Result<&'a Token, ParseError> {
        match self.peek() {
            Some(tok) if tok.is(kind, text) => {
                self.pos += 1;
                Ok(tok)
            }
            _ => Err(self.error_here(&format!("`{text}`"))),
        }
    }

    fn graph(&mut self) -> Result<(), ParseError> {
        self.expect(TokenKind::Keyword, "digraph")?;
        self.expect(TokenKind::Keyword, "callgraph")?;
        self.expect(TokenKind::Punctuation, "{")?;
        self.graph_descr()?;
        self.expect(TokenKind::Punctuation, "}")?;
        if self.peek().is_some() {
            return Err(self.error_here("end of input"));
        }
        Ok(())
    }

    fn graph_descr(&mut self) -> Result<(), ParseError> {
        loop {
            match self.peek() {
                Some(t) if t.kind == TokenKind::Quote => {
                    let source = self.identifier()?;
                    if self.peek_is(TokenKind::Punctuation, ";") {
                        self.pos += 1;
                        continue;
                    }
                    if !self.peek_is(TokenKind::Punctuation, "-") {
                        return Err(self.error_here("`;` or `->` after identifier"));
                    }
                    let arrow = self.expect(TokenKind::Punctuation, "-")?;
                    self.expect(TokenKind::Punctuation, ">")?;
                    let dest = self.identifier()?;
                    let style = if self.peek_is(TokenKind::Punctuation, "[") {
                        self.style_descr()?
                    } else {
                        self.out.missing_style.push((arrow.line, arrow.column));
                        if self.peek_is(TokenKind::Punctuation, ";") {
                            self.pos += 1;
                        }
                        EdgeStyle::Unspecified
                    };
                    self.out.edges.push(RawEdge {
                        source,
                        dest,
                        style,
                        file: self.file.to_owned(),
                    });
                }
                Some(t) if t.is(TokenKind::Punctuation, "[") => {
                    self.style_descr()?;
                }
                _ => return Ok(()),
            }
        }
    }

    fn style_descr(&mut self) -> Result<EdgeStyle, ParseError> {
        self.expect(TokenKind::Punctuation, "[")?;
        self.expect(TokenKind::Keyword, "style")?;
        self.expect(TokenKind::Punctuation, "=")?;
        let style = match self.peek() {
            Some(t) if t.is(TokenKind::Keyword, "solid") => EdgeStyle::Solid,
            Some(t) if t.is(TokenKind::Keyword, "dotted") => EdgeStyle::Dotted,
            _ => return Err(self.error_here("`solid` or `dotted`")),
        };
        self.pos += 1;
        self.expect(TokenKind::Punctuation, "]")?;
        self.expect(TokenKind::Punctuation, ";")?;
        Ok(style)
    }

    fn identifier(&mut self) -> Result<String, ParseError> {
        self.expect(TokenKind::Quote, "\"")?;
        let mut name = String::new();
        while self.peek_is(TokenKind::Punctuation, "_") {
            name.push('_');
            self.pos += 1;
        }
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                name.push_str(&t.text);
                self.pos += 1;
            }
            _ => return Err(self.error_here("function identifier")),
        }
        self.expect(TokenKind::Quote, "\"")?;
        Ok(name)
    }
}

/// Renders edges in the concrete syntax accepted by [`parse_eg`].
pub fn print_eg(edges: &[RawEdge]) -> String {
    let mut out = String::from("digraph callgraph {\n");
    for e in edges {
        match e.style {
            EdgeStyle::Unspecified => {
                let _ = writeln!(out, "\"{}\" -> \"{}\";", e.source, e.dest);
            }
            style => {
                let _ = writeln!(out, "\"{}\" -> \"{}\" [style={}];", e.source, e.dest, style);
            }
        }
    }
    out.push_str("}\n");
    out
}

/// True if `name` can be written as a quoted identifier.
pub fn is_valid_function_name(name: &str) -> bool {
    let body = name.trim_start_matches('_');
    let mut bytes = body.bytes();
    matches!(bytes.next(), Some(b) if b.is_ascii_alphanumeric())
        && bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_')
}
