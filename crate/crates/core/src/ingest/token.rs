//! Tokenizer for the egypt dot subset.
//!
//! Outside of quotes the input is made of the keywords `digraph`, `callgraph`,
//! `style`, `solid`, `dotted` and the punctuation `{ } ; - > [ ] =`. Inside a
//! quoted identifier every leading `_` is its own token, followed by one
//! identifier token. `-` and `>` are separate tokens, so `->` and `- >` both
//! work.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword,
    Punctuation,
    Identifier,
    Quote,
}

/// A token together with its 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: u32,
    pub column: u32,
}

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TokenKind::Keyword => write!(f, "keyword `{}`", self.text),
            TokenKind::Punctuation => write!(f, "`{}`", self.text),
            TokenKind::Identifier => write!(f, "identifier `{}`", self.text),
            TokenKind::Quote => f.write_str("`\"`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: unexpected character {found:?}")]
pub struct TokenizeError {
    pub line: u32,
    pub column: u32,
    pub found: char,
}

pub const KEYWORDS: [&str; 5] = ["digraph", "callgraph", "style", "solid", "dotted"];

const PUNCTUATION: &[u8] = b"{};->[]=";

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphanumeric()
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Splits `text` into positioned tokens.
pub fn tokenize(text: &str) -> Result<Vec<Token>, TokenizeError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::with_capacity(bytes.len() / 3);
    let mut line = 1u32;
    let mut column = 1u32;
    let mut in_quote = false;
    // Within a quoted name, underscores are only split off before the identifier body.
    let mut ident_seen = false;
    let mut i = 0;

    while i < bytes.len() {
        let b = bytes[i];
        let (tok_line, tok_col) = (line, column);
        let push = |tokens: &mut Vec<Token>, kind, s: &str| {
            tokens.push(Token {
                kind,
                text: s.to_owned(),
                line: tok_line,
                column: tok_col,
            })
        };

        match b {
            b'\n' => {
                line += 1;
                column = 1;
                i += 1;
                continue;
            }
            b' ' | b'\t' | b'\r' => {
                column += 1;
                i += 1;
                continue;
            }
            b'"' => {
                push(&mut tokens, TokenKind::Quote, "\"");
                in_quote = !in_quote;
                ident_seen = false;
                i += 1;
                column += 1;
                continue;
            }
            b'_' if in_quote && !ident_seen => {
                push(&mut tokens, TokenKind::Punctuation, "_");
                i += 1;
                column += 1;
                continue;
            }
            _ => {}
        }

        if is_ident_start(b) {
            let start = i;
            if in_quote {
                while i < bytes.len() && is_ident_continue(bytes[i]) {
                    i += 1;
                }
                ident_seen = true;
                push(&mut tokens, TokenKind::Identifier, &text[start..i]);
            } else {
                while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                let word = &text[start..i];
                let kind = if KEYWORDS.contains(&word) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Identifier
                };
                push(&mut tokens, kind, word);
            }
            column += (i - start) as u32;
            continue;
        }

        if !in_quote && PUNCTUATION.contains(&b) {
            push(&mut tokens, TokenKind::Punctuation, &text[i..i + 1]);
            i += 1;
            column += 1;
            continue;
        }

        let found = text[i..].chars().next().unwrap_or('\u{fffd}');
        return Err(TokenizeError {
            line: tok_line,
            column: tok_col,
            found,
        });
    }

    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(tokens: &[Token]) -> Vec<(TokenKind, &str)> {
        tokens.iter().map(|t| (t.kind, t.text.as_str())).collect()
    }

    #[test]
    fn quoted_name() {
        let toks = tokenize("\"main\"").unwrap();
        assert_eq!(
            shape(&toks),
            vec![
                (TokenKind::Quote, "\""),
                (TokenKind::Identifier, "main"),
                (TokenKind::Quote, "\"")
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").unwrap().is_empty());
        assert!(tokenize(" \n\t ").unwrap().is_empty());
    }

    #[test]
    fn leading_underscores_are_separate() {
        let toks = tokenize("\"__x1\"").unwrap();
        assert_eq!(
            shape(&toks),
            vec![
                (TokenKind::Quote, "\""),
                (TokenKind::Punctuation, "_"),
                (TokenKind::Punctuation, "_"),
                (TokenKind::Identifier, "x1"),
                (TokenKind::Quote, "\"")
            ]
        );
    }

    #[test]
    fn inner_underscores_stay_in_identifier() {
        let toks = tokenize("\"__do_sys_open2\"").unwrap();
        assert_eq!(toks[3].text, "do_sys_open2");
        assert_eq!(toks.len(), 5);
    }

    #[test]
    fn arrow_spellings() {
        let a = shape(&tokenize("\"a\" -> \"b\"").unwrap())
            .into_iter()
            .map(|(k, t)| (k, t.to_owned()))
            .collect::<Vec<_>>();
        let b = shape(&tokenize("\"a\" - > \"b\"").unwrap())
            .into_iter()
            .map(|(k, t)| (k, t.to_owned()))
            .collect::<Vec<_>>();
        assert_eq!(a, b);
    }

    #[test]
    fn keywords_only_outside_quotes() {
        let toks = tokenize("style \"style\"").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Keyword);
        assert_eq!(toks[2].kind, TokenKind::Identifier);
    }

    #[test]
    fn positions() {
        let toks = tokenize("digraph callgraph {\n  \"a\";\n}").unwrap();
        let pos: Vec<_> = toks.iter().map(|t| (t.line, t.column)).collect();
        assert_eq!(pos, vec![(1, 1), (1, 9), (1, 19), (2, 3), (2, 4), (2, 5), (2, 6), (3, 1)]);
    }

    #[test]
    fn rejects_foreign_bytes() {
        let err = tokenize("digraph callgraph {\n \"a.b\" }").unwrap_err();
        assert_eq!((err.line, err.column, err.found), (2, 4, '.'));
        assert!(tokenize("\"a$\"").is_err());
        assert!(tokenize("digraph # x").is_err());
    }

    #[test]
    fn token_text_reproduces_input() {
        let src = "digraph callgraph {\n\"__kmalloc\" -> \"x_y\" [style=dotted];\n\"n\";\n}\n";
        let toks = tokenize(src).unwrap();
        let joined: String = toks.iter().map(|t| t.text.as_str()).collect();
        let stripped: String = src.chars().filter(|c| !c.is_whitespace()).collect();
        assert_eq!(joined, stripped);
    }
}
