//! Formulas and sequents of intuitionistic propositional logic.
//!
//! Formulas are immutable, reference-counted trees. Every node caches its
//! length, a structural hash and its printed text, so that equality, hashing
//! and the canonical antecedent order are cheap. Negation is not a
//! constructor: `~A` is parsed as `A -> false`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

/// Syntax error with the byte offset at which it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    fn new(position: usize, message: impl Into<String>) -> Self {
        ParseError {
            position,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenameError {
    #[error("variable renaming is not injective: P{0} and P{1} both map to P{2}")]
    NotInjective(u32, u32, u32),
    #[error("variable P{0} is mapped to the invalid index 0")]
    ZeroIndex(u32),
}

/// The shape of a formula node.
#[derive(Clone)]
pub enum Kind {
    Var(u32),
    Bottom,
    And(Formula, Formula),
    Or(Formula, Formula),
    Imp(Formula, Formula),
}

struct Node {
    kind: Kind,
    len: u32,
    hash: u64,
    text: Box<str>,
}

/// An IPL formula. Cloning is a reference-count increment.
#[derive(Clone)]
pub struct Formula(Arc<Node>);

// Printing precedence: larger binds tighter.
const PREC_IMP: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_ATOM: u8 = 4;

fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn combine(tag: u64, a: u64, b: u64) -> u64 {
    mix(mix(tag ^ a.rotate_left(17)) ^ b)
}

impl Formula {
    pub fn var(index: u32) -> Formula {
        assert!(index >= 1, "variable indices start at 1");
        Formula(Arc::new(Node {
            kind: Kind::Var(index),
            len: 1,
            hash: mix(u64::from(index)),
            text: format!("P{index}").into_boxed_str(),
        }))
    }

    pub fn bottom() -> Formula {
        Formula(Arc::new(Node {
            kind: Kind::Bottom,
            len: 1,
            hash: mix(u64::MAX),
            text: "false".into(),
        }))
    }

    pub fn and(left: Formula, right: Formula) -> Formula {
        Self::binary(Kind::And(left, right))
    }

    pub fn or(left: Formula, right: Formula) -> Formula {
        Self::binary(Kind::Or(left, right))
    }

    pub fn imp(left: Formula, right: Formula) -> Formula {
        Self::binary(Kind::Imp(left, right))
    }

    /// `~A`, stored as `A -> false`.
    pub fn not(inner: Formula) -> Formula {
        Self::imp(inner, Formula::bottom())
    }

    fn binary(kind: Kind) -> Formula {
        let (tag, op, prec, l, r) = match &kind {
            Kind::And(l, r) => (1u64, " & ", PREC_AND, l, r),
            Kind::Or(l, r) => (2, " | ", PREC_OR, l, r),
            Kind::Imp(l, r) => (3, " -> ", PREC_IMP, l, r),
            _ => unreachable!(),
        };
        // & and | associate to the left, -> to the right.
        let (wrap_l, wrap_r) = if prec == PREC_IMP {
            (l.precedence() <= prec, r.precedence() < prec)
        } else {
            (l.precedence() < prec, r.precedence() <= prec)
        };
        let mut text = String::with_capacity(l.text().len() + r.text().len() + 8);
        push_wrapped(&mut text, l.text(), wrap_l);
        text.push_str(op);
        push_wrapped(&mut text, r.text(), wrap_r);
        let len = l.0.len + r.0.len + 1;
        let hash = combine(tag, l.0.hash, r.0.hash);
        Formula(Arc::new(Node {
            kind,
            len,
            hash,
            text: text.into_boxed_str(),
        }))
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    /// Number of variable and symbol occurrences (`~A` counts as `A -> false`).
    pub fn length(&self) -> usize {
        self.0.len as usize
    }

    /// Minimal-parentheses rendering under the formula grammar.
    pub fn text(&self) -> &str {
        &self.0.text
    }

    pub fn structural_hash(&self) -> u64 {
        self.0.hash
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self.kind(), Kind::Var(_) | Kind::Bottom)
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self.kind(), Kind::Bottom)
    }

    fn precedence(&self) -> u8 {
        match self.kind() {
            Kind::Var(_) | Kind::Bottom => PREC_ATOM,
            Kind::And(..) => PREC_AND,
            Kind::Or(..) => PREC_OR,
            Kind::Imp(..) => PREC_IMP,
        }
    }

    /// Indices of the variables occurring in the formula.
    pub fn variables(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<u32>) {
        match self.kind() {
            Kind::Var(i) => {
                out.insert(*i);
            }
            Kind::Bottom => {}
            Kind::And(l, r) | Kind::Or(l, r) | Kind::Imp(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn max_var(&self) -> u32 {
        match self.kind() {
            Kind::Var(i) => *i,
            Kind::Bottom => 0,
            Kind::And(l, r) | Kind::Or(l, r) | Kind::Imp(l, r) => l.max_var().max(r.max_var()),
        }
    }

    /// Applies `map` to every variable; unmapped indices are left unchanged.
    pub fn rename(&self, map: &BTreeMap<u32, u32>) -> Result<Formula, RenameError> {
        check_injective(&self.variables(), map)?;
        Ok(self.rename_unchecked(map))
    }

    pub(crate) fn rename_unchecked(&self, map: &BTreeMap<u32, u32>) -> Formula {
        match self.kind() {
            Kind::Var(i) => match map.get(i) {
                Some(j) if j != i => Formula::var(*j),
                _ => self.clone(),
            },
            Kind::Bottom => self.clone(),
            Kind::And(l, r) => Formula::and(l.rename_unchecked(map), r.rename_unchecked(map)),
            Kind::Or(l, r) => Formula::or(l.rename_unchecked(map), r.rename_unchecked(map)),
            Kind::Imp(l, r) => Formula::imp(l.rename_unchecked(map), r.rename_unchecked(map)),
        }
    }
}

fn push_wrapped(out: &mut String, text: &str, wrap: bool) {
    if wrap {
        out.push('(');
        out.push_str(text);
        out.push(')');
    } else {
        out.push_str(text);
    }
}

fn check_injective(vars: &BTreeSet<u32>, map: &BTreeMap<u32, u32>) -> Result<(), RenameError> {
    let mut seen: BTreeMap<u32, u32> = BTreeMap::new();
    for &v in vars {
        let image = map.get(&v).copied().unwrap_or(v);
        if image == 0 {
            return Err(RenameError::ZeroIndex(v));
        }
        if let Some(&other) = seen.get(&image) {
            return Err(RenameError::NotInjective(other, v, image));
        }
        seen.insert(image, v);
    }
    Ok(())
}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        // The printed text is injective, so it decides structural equality.
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.hash == other.0.hash && self.0.len == other.0.len && self.0.text == other.0.text)
    }
}

impl Eq for Formula {}

impl Hash for Formula {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

/// Canonical order: by length, then by printed text.
impl Ord for Formula {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0
            .len
            .cmp(&other.0.len)
            .then_with(|| self.0.text.cmp(&other.0.text))
    }
}

impl PartialOrd for Formula {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text())
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Formula({})", self.text())
    }
}

pub fn formula_length(f: &Formula) -> usize {
    f.length()
}

pub fn print_formula(f: &Formula) -> String {
    f.text().to_owned()
}

pub fn rename_variables(f: &Formula, map: &BTreeMap<u32, u32>) -> Result<Formula, RenameError> {
    f.rename(map)
}

/// `A1, ..., Ak => G` with the antecedent multiset kept in canonical order.
#[derive(Clone)]
pub struct Sequent {
    antecedents: Vec<Formula>,
    consequent: Formula,
    hash: u64,
}

impl Sequent {
    pub fn new(mut antecedents: Vec<Formula>, consequent: Formula) -> Sequent {
        antecedents.sort();
        Self::from_sorted(antecedents, consequent)
    }

    /// `=> goal`
    pub fn goal(consequent: Formula) -> Sequent {
        Self::from_sorted(Vec::new(), consequent)
    }

    pub(crate) fn from_sorted(antecedents: Vec<Formula>, consequent: Formula) -> Sequent {
        debug_assert!(antecedents.windows(2).all(|w| w[0] <= w[1]));
        let mut hash = mix(consequent.structural_hash() ^ 0x5eed);
        for a in &antecedents {
            hash = combine(7, hash, a.structural_hash());
        }
        Sequent {
            antecedents,
            consequent,
            hash,
        }
    }

    pub fn antecedents(&self) -> &[Formula] {
        &self.antecedents
    }

    pub fn consequent(&self) -> &Formula {
        &self.consequent
    }

    /// Total length of all formulas in the sequent.
    pub fn length(&self) -> usize {
        self.antecedents.iter().map(Formula::length).sum::<usize>() + self.consequent.length()
    }

    pub fn max_var(&self) -> u32 {
        self.antecedents
            .iter()
            .map(Formula::max_var)
            .fold(self.consequent.max_var(), u32::max)
    }

    pub fn variables(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        for a in &self.antecedents {
            a.collect_vars(&mut out);
        }
        self.consequent.collect_vars(&mut out);
        out
    }

    pub fn rename(&self, map: &BTreeMap<u32, u32>) -> Result<Sequent, RenameError> {
        check_injective(&self.variables(), map)?;
        Ok(Sequent::new(
            self.antecedents.iter().map(|a| a.rename_unchecked(map)).collect(),
            self.consequent.rename_unchecked(map),
        ))
    }

    /// Returns a copy with the antecedent at `index` removed and `added` inserted.
    pub(crate) fn replace(&self, index: Option<usize>, added: &[Formula], consequent: Formula) -> Sequent {
        let mut ants = Vec::with_capacity(self.antecedents.len() + added.len());
        for (i, a) in self.antecedents.iter().enumerate() {
            if Some(i) != index {
                ants.push(a.clone());
            }
        }
        for f in added {
            let pos = ants.partition_point(|x| x <= f);
            ants.insert(pos, f.clone());
        }
        Sequent::from_sorted(ants, consequent)
    }

    pub fn structural_hash(&self) -> u64 {
        self.hash
    }
}

pub fn sequent_length(s: &Sequent) -> usize {
    s.length()
}

impl PartialEq for Sequent {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash && self.consequent == other.consequent && self.antecedents == other.antecedents
    }
}

impl Eq for Sequent {}

impl Hash for Sequent {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash);
    }
}

impl Ord for Sequent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.length()
            .cmp(&other.length())
            .then_with(|| self.antecedents.len().cmp(&other.antecedents.len()))
            .then_with(|| self.antecedents.cmp(&other.antecedents))
            .then_with(|| self.consequent.cmp(&other.consequent))
    }
}

impl PartialOrd for Sequent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.antecedents.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(a.text())?;
        }
        if !self.antecedents.is_empty() {
            f.write_str(" ")?;
        }
        write!(f, "|- {}", self.consequent.text())
    }
}

impl fmt::Debug for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sequent({self})")
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Var(u32),
    False,
    Not,
    And,
    Or,
    Imp,
    Turnstile,
    Comma,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(usize, Token)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (at, tok) = lx.next_token()?;
            let end = tok == Token::End;
            out.push((at, tok));
            if end {
                return Ok(out);
            }
        }
    }

    fn next_token(&mut self) -> Result<(usize, Token), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            return Ok((start, Token::End));
        };
        let rest = &self.src[self.pos..];
        let (tok, width) = match c {
            b'(' => (Token::LParen, 1),
            b')' => (Token::RParen, 1),
            b',' => (Token::Comma, 1),
            b'~' => (Token::Not, 1),
            b'&' => (Token::And, 1),
            b'|' if rest.starts_with("|-") => (Token::Turnstile, 2),
            b'|' => (Token::Or, 1),
            b'-' if rest.starts_with("->") => (Token::Imp, 2),
            b'P' => {
                let digits = rest[1..].bytes().take_while(u8::is_ascii_digit).count();
                if digits == 0 {
                    return Err(ParseError::new(start, "expected digits after 'P'"));
                }
                let index: u32 = rest[1..1 + digits]
                    .parse()
                    .map_err(|_| ParseError::new(start, "variable index out of range"))?;
                if index == 0 {
                    return Err(ParseError::new(start, "variable index 0 is not allowed"));
                }
                (Token::Var(index), 1 + digits)
            }
            _ if rest.starts_with("false") => (Token::False, 5),
            _ => {
                let ch = rest.chars().next().unwrap_or('?');
                return Err(ParseError::new(start, format!("unexpected character {ch:?}")));
            }
        };
        self.pos += width;
        Ok((start, tok))
    }
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].1
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].0
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].1.clone();
        if tok != Token::End {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, want: Token, what: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::new(self.offset(), format!("expected {what}")))
        }
    }

    // imp := or ("->" imp)?
    fn imp(&mut self) -> Result<Formula, ParseError> {
        let left = self.or()?;
        if *self.peek() == Token::Imp {
            self.bump();
            let right = self.imp()?;
            return Ok(Formula::imp(left, right));
        }
        Ok(left)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.and()?;
        while *self.peek() == Token::Or {
            self.bump();
            left = Formula::or(left, self.and()?);
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.unary()?;
        while *self.peek() == Token::And {
            self.bump();
            left = Formula::and(left, self.unary()?);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let at = self.offset();
        match self.bump() {
            Token::Not => Ok(Formula::not(self.unary()?)),
            Token::Var(i) => Ok(Formula::var(i)),
            Token::False => Ok(Formula::bottom()),
            Token::LParen => {
                let inner = self.imp()?;
                self.expect(Token::RParen, "')'")?;
                Ok(inner)
            }
            Token::End => Err(ParseError::new(at, "unexpected end of input")),
            other => Err(ParseError::new(at, format!("unexpected token {other:?}"))),
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Token::End {
            Ok(())
        } else {
            Err(ParseError::new(self.offset(), "trailing input"))
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        tokens: Lexer::tokens(text)?,
        pos: 0,
    };
    let f = p.imp()?;
    p.finish()?;
    Ok(f)
}

/// Parses `A1, ..., Ak |- G`. A bare formula is read as `|- A`.
pub fn parse_sequent(text: &str) -> Result<Sequent, ParseError> {
    let mut p = Parser {
        tokens: Lexer::tokens(text)?,
        pos: 0,
    };
    let mut antecedents = Vec::new();
    if *p.peek() != Token::Turnstile {
        let first = p.imp()?;
        if *p.peek() == Token::End {
            return Ok(Sequent::goal(first));
        }
        antecedents.push(first);
        while *p.peek() == Token::Comma {
            p.bump();
            antecedents.push(p.imp()?);
        }
    }
    p.expect(Token::Turnstile, "'|-'")?;
    let consequent = p.imp()?;
    p.finish()?;
    Ok(Sequent::new(antecedents, consequent))
}

impl std::str::FromStr for Formula {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

impl std::str::FromStr for Sequent {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_sequent(s)
    }
}
