use std::collections::BTreeMap;

use super::lexer::{tokenize, Tok, Token};
use super::{DslError, Pos, Span, TreeDocument, FORMAT_VERSION};
use crate::bt::{NodeKind, TreeNode};

/// Nesting limit; deeper input is rejected rather than recursed into.
pub const MAX_DEPTH: usize = 128;

const NODE_START: &[&str] = &["sequence", "fallback", "parallel", "action", "condition"];

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Parser<'t> {
    tokens: &'t [Token],
    at: usize,
    spans: BTreeMap<String, Span>,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> &'t Token {
        &self.tokens[self.at]
    }

    fn bump(&mut self) -> &'t Token {
        let t = &self.tokens[self.at];
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, token: &Token, expected: &[&str]) -> DslError {
        DslError::Syntax {
            line: token.start.line,
            col: token.start.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: token.tok.describe(),
        }
    }

    fn expect(&mut self, want: Tok, label: &str) -> Result<&'t Token, DslError> {
        let t = self.peek();
        if t.tok == want {
            Ok(self.bump())
        } else {
            Err(self.error(t, &[label]))
        }
    }

    fn header(&mut self) -> Result<(), DslError> {
        let first = self.peek();
        match &first.tok {
            Tok::Eof => return Err(DslError::EmptyDocument),
            Tok::Word(w) if w == "btdsl" => {}
            _ => return Err(self.error(first, &["btdsl"])),
        }
        self.bump();
        let version = self.peek();
        match &version.tok {
            Tok::Word(v) if v == FORMAT_VERSION && version.start.line == first.start.line => {
                self.bump();
                Ok(())
            }
            _ => Err(self.error(version, &[FORMAT_VERSION])),
        }
    }

    fn node(&mut self, path: &str, depth: usize) -> Result<TreeNode, DslError> {
        let head = self.peek();
        let kind = match &head.tok {
            Tok::Word(w) => match w.as_str() {
                "sequence" => NodeKind::Sequence,
                "fallback" => NodeKind::Fallback,
                "parallel" => NodeKind::Parallel,
                "action" => NodeKind::Action,
                "condition" => NodeKind::Condition,
                _ => return Err(self.error(head, NODE_START)),
            },
            _ => return Err(self.error(head, NODE_START)),
        };
        if depth > MAX_DEPTH {
            return Err(DslError::Syntax {
                line: head.start.line,
                col: head.start.col,
                expected: vec![format!("nesting depth <= {MAX_DEPTH}")],
                found: head.tok.describe(),
            });
        }
        self.bump();
        let mut node = if kind.is_composite() {
            TreeNode {
                kind,
                leaf_name: None,
                children: Vec::new(),
                params: BTreeMap::new(),
            }
        } else {
            let name_tok = self.peek();
            let name = match &name_tok.tok {
                Tok::Word(w) if is_ident(w) => w.clone(),
                _ => return Err(self.error(name_tok, &["identifier"])),
            };
            self.bump();
            TreeNode {
                kind,
                leaf_name: Some(name),
                children: Vec::new(),
                params: BTreeMap::new(),
            }
        };
        let mut end = self.tokens[self.at.saturating_sub(1)].end;
        if self.peek().tok == Tok::LParen {
            node.params = self.attrs()?;
            end = self.tokens[self.at - 1].end;
        }
        if kind.is_composite() {
            self.expect(Tok::LBrace, "`{`")?;
            loop {
                let t = self.peek();
                match &t.tok {
                    Tok::RBrace if !node.children.is_empty() => {
                        end = self.bump().end;
                        break;
                    }
                    Tok::Word(_) => {
                        let child_path = format!("{path}{}/", node.children.len());
                        let child = self.node(&child_path, depth + 1)?;
                        node.children.push(child);
                    }
                    _ if node.children.is_empty() => return Err(self.error(t, NODE_START)),
                    _ => {
                        let mut expected = NODE_START.to_vec();
                        expected.push("`}`");
                        return Err(self.error(t, &expected));
                    }
                }
            }
        }
        self.spans.insert(path.to_string(), Span { start: head.start, end });
        Ok(node)
    }

    fn attrs(&mut self) -> Result<BTreeMap<String, String>, DslError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut out = BTreeMap::new();
        loop {
            let key_tok = self.peek();
            let key = match &key_tok.tok {
                Tok::Word(w) if is_ident(w) => w.clone(),
                _ => return Err(self.error(key_tok, &["attribute key"])),
            };
            self.bump();
            self.expect(Tok::Eq, "`=`")?;
            let value_tok = self.peek();
            let value = match &value_tok.tok {
                Tok::Word(w) => w.clone(),
                _ => return Err(self.error(value_tok, &["attribute value"])),
            };
            self.bump();
            if out.insert(key, value).is_some() {
                return Err(self.error(key_tok, &["distinct attribute key"]));
            }
            let sep = self.peek();
            match sep.tok {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RParen => {
                    self.bump();
                    return Ok(out);
                }
                _ => return Err(self.error(sep, &["`,`", "`)`"])),
            }
        }
    }
}

pub(crate) fn parse(text: &str) -> Result<TreeDocument, DslError> {
    let tokens = tokenize(text).map_err(|e| DslError::Syntax {
        line: e.pos.line,
        col: e.pos.col,
        expected: vec!["token".into()],
        found: format!("`{}`", e.found),
    })?;
    let mut p = Parser {
        tokens: &tokens,
        at: 0,
        spans: BTreeMap::new(),
    };
    p.header()?;
    if p.peek().tok == Tok::Eof {
        return Err(DslError::EmptyDocument);
    }
    let root = p.node("/", 0)?;
    let trailing = p.peek();
    match trailing.tok {
        Tok::Eof => {}
        Tok::Word(ref w) if NODE_START.contains(&w.as_str()) => {
            return Err(DslError::DuplicateRoot {
                line: trailing.start.line,
                col: trailing.start.col,
            })
        }
        _ => return Err(p.error(trailing, &["end of input"])),
    }
    Ok(TreeDocument {
        source: text.to_string(),
        root,
        spans: p.spans,
        version: 1,
    })
}

/// Position of byte `offset` in `bytes` as 1-based line/column.
pub(crate) fn byte_pos(bytes: &[u8], offset: usize) -> Pos {
    let before = &bytes[..offset.min(bytes.len())];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let line_start = before.iter().rposition(|&b| b == b'\n').map(|i| i + 1).unwrap_or(0);
    let col = String::from_utf8_lossy(&before[line_start..]).chars().count() + 1;
    Pos { line, col }
}
