//! Proof trees, their text format and an independent checker.
//!
//! Text format, one node per line, children indented by two spaces:
//!
//! ```text
//! (ImpRight "|- P1 -> P1"
//!   (Init 0 "P1 |- P1"))
//! ```

use std::fmt;

use thiserror::Error;

use super::{apply_rule, RuleId, RuleInstance};
use crate::syntax::{parse_sequent, Sequent};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofTree {
    pub sequent: Sequent,
    pub rule: RuleInstance,
    pub children: Vec<ProofTree>,
}

impl ProofTree {
    /// Number of nodes, i.e. rule applications.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(ProofTree::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(ProofTree::depth).max().unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_node(0, &mut out);
        out
    }

    fn write_node(&self, depth: usize, out: &mut String) {
        for _ in 0..depth {
            out.push_str("  ");
        }
        out.push('(');
        out.push_str(&self.rule.to_string());
        out.push_str(" \"");
        out.push_str(&self.sequent.to_string());
        out.push('"');
        for c in &self.children {
            out.push('\n');
            c.write_node(depth + 1, out);
        }
        out.push(')');
    }
}

impl fmt::Display for ProofTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed proof at byte {position}: {message}")]
pub struct ProofFormatError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid proof at node {}: {reason}", render_path(.path))]
pub struct ProofCheckError {
    /// Child indices from the root to the offending node.
    pub path: Vec<usize>,
    pub reason: String,
}

fn render_path(path: &[usize]) -> String {
    if path.is_empty() {
        return "/".to_owned();
    }
    path.iter().map(|i| format!("/{i}")).collect()
}

/// Accepts `t` iff it proves `goal`: each node's children are exactly the
/// premises of its rule instance, and leaves are axioms.
pub fn check_proof(t: &ProofTree, goal: &Sequent) -> Result<(), ProofCheckError> {
    if &t.sequent != goal {
        return Err(ProofCheckError {
            path: vec![],
            reason: format!("root proves `{}`, expected `{goal}`", t.sequent),
        });
    }
    let mut path = Vec::new();
    check_node(t, &mut path)
}

fn check_node(t: &ProofTree, path: &mut Vec<usize>) -> Result<(), ProofCheckError> {
    let err = |path: &Vec<usize>, reason: String| ProofCheckError {
        path: path.clone(),
        reason,
    };
    let premises = apply_rule(&t.sequent, &t.rule).map_err(|e| err(path, e.to_string()))?;
    if premises.len() != t.children.len() {
        return Err(err(
            path,
            format!(
                "{} has {} premises but the node has {} children",
                t.rule,
                premises.len(),
                t.children.len()
            ),
        ));
    }
    for (k, (premise, child)) in premises.iter().zip(&t.children).enumerate() {
        path.push(k);
        if &child.sequent != premise {
            return Err(err(
                path,
                format!("expected premise `{premise}`, found `{}`", child.sequent),
            ));
        }
        check_node(child, path)?;
        path.pop();
    }
    Ok(())
}

#[derive(Debug, PartialEq)]
enum Tok {
    Open,
    Close,
    Word(String),
    Str(String),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ProofFormatError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            _ if c.is_ascii_whitespace() => i += 1,
            b'(' => {
                out.push((i, Tok::Open));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::Close));
                i += 1;
            }
            b'"' => {
                let end = text[i + 1..].find('"').ok_or_else(|| ProofFormatError {
                    position: i,
                    message: "unterminated string".into(),
                })?;
                out.push((i, Tok::Str(text[i + 1..i + 1 + end].to_owned())));
                i += end + 2;
            }
            _ if c.is_ascii_alphanumeric() => {
                let len = text[i..]
                    .bytes()
                    .take_while(u8::is_ascii_alphanumeric)
                    .count();
                out.push((i, Tok::Word(text[i..i + len].to_owned())));
                i += len;
            }
            _ => {
                return Err(ProofFormatError {
                    position: i,
                    message: format!("unexpected character {:?}", c as char),
                })
            }
        }
    }
    Ok(out)
}

/// Parses the text produced by [`ProofTree::to_text`].
pub fn parse_proof(text: &str) -> Result<ProofTree, ProofFormatError> {
    let toks = tokenize(text)?;
    let mut pos = 0;
    let tree = parse_node(&toks, &mut pos, text.len())?;
    if let Some((at, _)) = toks.get(pos) {
        return Err(ProofFormatError {
            position: *at,
            message: "trailing input".into(),
        });
    }
    Ok(tree)
}

fn parse_node(toks: &[(usize, Tok)], pos: &mut usize, eof: usize) -> Result<ProofTree, ProofFormatError> {
    let at = |pos: usize| toks.get(pos).map_or(eof, |t| t.0);
    let fail = |position: usize, message: &str| ProofFormatError {
        position,
        message: message.to_owned(),
    };
    if !matches!(toks.get(*pos), Some((_, Tok::Open))) {
        return Err(fail(at(*pos), "expected '('"));
    }
    *pos += 1;
    let rule: RuleId = match toks.get(*pos) {
        Some((p, Tok::Word(w))) => w.parse().map_err(|m: String| fail(*p, &m))?,
        _ => return Err(fail(at(*pos), "expected a rule name")),
    };
    *pos += 1;
    let mut principal = None;
    if let Some((p, Tok::Word(w))) = toks.get(*pos) {
        principal = Some(w.parse::<usize>().map_err(|_| fail(*p, "expected a principal position"))?);
        *pos += 1;
    }
    let sequent = match toks.get(*pos) {
        Some((p, Tok::Str(s))) => parse_sequent(s).map_err(|e| fail(*p, &format!("bad sequent: {e}")))?,
        _ => return Err(fail(at(*pos), "expected a quoted sequent")),
    };
    *pos += 1;
    let mut children = Vec::new();
    loop {
        match toks.get(*pos) {
            Some((_, Tok::Close)) => {
                *pos += 1;
                break;
            }
            Some((_, Tok::Open)) => children.push(parse_node(toks, pos, eof)?),
            _ => return Err(fail(at(*pos), "expected ')' or a child node")),
        }
    }
    Ok(ProofTree {
        sequent,
        rule: RuleInstance { rule, principal },
        children,
    })
}
