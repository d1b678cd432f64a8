//! Sequents as labelled directed graphs.
//!
//! Variable names are erased, so graphs must not depend on them. Before
//! encoding, a sequent is put into a canonical renaming (see
//! [`canonical_form`]); vertices are then numbered in post-order of first
//! occurrence, consequent first, with the root vertex last. Renamed copies of
//! a sequent therefore produce identical graphs, not merely isomorphic ones.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::syntax::{Formula, Kind, Sequent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexLabel {
    Root,
    Imp,
    And,
    Or,
    Bottom,
    Var,
}

impl VertexLabel {
    pub const ALL: [VertexLabel; 6] = [
        VertexLabel::Root,
        VertexLabel::Imp,
        VertexLabel::And,
        VertexLabel::Or,
        VertexLabel::Bottom,
        VertexLabel::Var,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            VertexLabel::Root => "Root",
            VertexLabel::Imp => "Imp",
            VertexLabel::And => "And",
            VertexLabel::Or => "Or",
            VertexLabel::Bottom => "Bottom",
            VertexLabel::Var => "Var",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeLabel {
    Left,
    Right,
}

impl EdgeLabel {
    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum GraphFormat {
    /// Only leaves of the same variable are merged.
    Vm,
    /// Every structurally identical subterm is merged.
    #[default]
    Tm,
}

impl fmt::Display for GraphFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphFormat::Vm => "vm",
            GraphFormat::Tm => "tm",
        })
    }
}

impl FromStr for GraphFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "vm" => Ok(GraphFormat::Vm),
            "tm" => Ok(GraphFormat::Tm),
            _ => Err(format!("unknown graph format `{s}` (expected vm or tm)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub source: u32,
    pub target: u32,
    pub label: EdgeLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledGraph {
    pub labels: Vec<VertexLabel>,
    pub edges: Vec<Edge>,
    pub root: u32,
}

impl LabeledGraph {
    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    /// Text dump: `v<id> <label>` per vertex, then `e <src> <dst> <L|R>`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, l) in self.labels.iter().enumerate() {
            out.push_str(&format!("v{i} {}\n", l.name()));
        }
        for e in &self.edges {
            let l = match e.label {
                EdgeLabel::Left => 'L',
                EdgeLabel::Right => 'R',
            };
            out.push_str(&format!("e {} {} {l}\n", e.source, e.target));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Canonical renaming

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Tok {
    Var(u32),
    Bottom,
    And,
    Or,
    Imp,
}

#[derive(Clone, Default)]
struct Renaming {
    // (original, canonical) pairs; sequents have few variables.
    pairs: Vec<(u32, u32)>,
}

impl Renaming {
    fn get(&self, v: u32) -> Option<u32> {
        self.pairs.iter().find(|p| p.0 == v).map(|p| p.1)
    }

    fn next(&self) -> u32 {
        self.pairs.len() as u32 + 1
    }

    /// Prefix token string of `f`; unmapped variables get fresh numbers in
    /// order of first occurrence. With `assign` the fresh numbers are kept.
    fn tokens(&mut self, f: &Formula, assign: bool) -> Vec<Tok> {
        let mark = self.pairs.len();
        let mut out = Vec::with_capacity(f.length());
        self.walk(f, &mut out);
        if !assign {
            self.pairs.truncate(mark);
        }
        out
    }

    fn walk(&mut self, f: &Formula, out: &mut Vec<Tok>) {
        match f.kind() {
            Kind::Var(v) => {
                let c = self.get(*v).unwrap_or_else(|| {
                    let c = self.next();
                    self.pairs.push((*v, c));
                    c
                });
                out.push(Tok::Var(c));
            }
            Kind::Bottom => out.push(Tok::Bottom),
            Kind::And(a, b) | Kind::Or(a, b) | Kind::Imp(a, b) => {
                out.push(match f.kind() {
                    Kind::And(..) => Tok::And,
                    Kind::Or(..) => Tok::Or,
                    _ => Tok::Imp,
                });
                self.walk(a, out);
                self.walk(b, out);
            }
        }
    }
}

type Key = (usize, Vec<Tok>);

struct CanonSearch {
    branches_left: usize,
    best: Option<(Vec<Key>, Vec<usize>, Renaming)>,
}

const MAX_BRANCHES: usize = 4096;

impl CanonSearch {
    fn run(&mut self, ants: &[Formula], remaining: Vec<usize>, ren: Renaming, chosen: Vec<usize>, keys: Vec<Key>) {
        if let Some((best, ..)) = &self.best {
            // Keys are appended in increasing order within a branch, so a
            // prefix that already exceeds the best cannot win.
            if keys.as_slice() > &best[..keys.len().min(best.len())] {
                return;
            }
        }
        if remaining.is_empty() {
            if self.best.as_ref().is_none_or(|(b, ..)| keys < *b) {
                self.best = Some((keys, chosen, ren));
            }
            return;
        }
        let mut scratch = ren.clone();
        let mut min_key: Option<Key> = None;
        let mut tied: Vec<usize> = Vec::new();
        for &i in &remaining {
            let k = (ants[i].length(), scratch.tokens(&ants[i], false));
            match &min_key {
                Some(m) if k > *m => {}
                Some(m) if k == *m => {
                    if !tied.iter().any(|&j| ants[j] == ants[i]) {
                        tied.push(i);
                    }
                }
                _ => {
                    min_key = Some(k);
                    tied = vec![i];
                }
            }
        }
        let key = min_key.expect("remaining is non-empty");
        let branch = tied.len() > 1 && self.branches_left > 0 && !private_fresh_vars(ants, &remaining, &tied, &ren);
        let options: &[usize] = if branch { &tied } else { &tied[..1] };
        if branch {
            self.branches_left = self.branches_left.saturating_sub(tied.len() - 1);
        }
        for &pick in options {
            let mut ren = ren.clone();
            ren.tokens(&ants[pick], true);
            let pos = remaining.iter().position(|&x| x == pick).expect("pick is remaining");
            let mut rest = remaining.clone();
            rest.remove(pos);
            let mut chosen = chosen.clone();
            chosen.push(pick);
            let mut keys = keys.clone();
            keys.push(key.clone());
            self.run(ants, rest, ren, chosen, keys);
        }
    }
}

/// True if no fresh variable of a tied candidate occurs in any other
/// remaining formula; then the order among the tied candidates is immaterial.
fn private_fresh_vars(ants: &[Formula], remaining: &[usize], tied: &[usize], ren: &Renaming) -> bool {
    tied.iter().all(|&t| {
        let fresh: Vec<u32> = ants[t].variables().into_iter().filter(|v| ren.get(*v).is_none()).collect();
        remaining
            .iter()
            .filter(|&&i| i != t)
            .all(|&i| fresh.iter().all(|v| !ants[i].variables().contains(v)))
    })
}

/// A renaming of `s` that depends only on its structure: the consequent's
/// variables are numbered first, then antecedents are taken greedily in
/// order of (length, token string) and their new variables numbered as they
/// appear. Ties that could matter are resolved by trying every choice and
/// keeping the least outcome. Returns the antecedents in canonical order and
/// the renamed consequent.
pub fn canonical_form(s: &Sequent) -> (Vec<Formula>, Formula) {
    let mut ren = Renaming::default();
    ren.tokens(s.consequent(), true);
    let ants = s.antecedents();
    let mut search = CanonSearch {
        branches_left: MAX_BRANCHES,
        best: None,
    };
    search.run(ants, (0..ants.len()).collect(), ren, Vec::new(), Vec::new());
    let (_, order, ren) = search.best.expect("search visits at least one leaf");
    let map: BTreeMap<u32, u32> = ren.pairs.iter().copied().collect();
    let renamed = order.iter().map(|&i| ants[i].rename_unchecked(&map)).collect();
    (renamed, s.consequent().rename_unchecked(&map))
}

// ---------------------------------------------------------------------------
// Encoding

struct Builder {
    format: GraphFormat,
    labels: Vec<VertexLabel>,
    edges: Vec<Edge>,
    vars: HashMap<u32, u32>,
    terms: HashMap<(VertexLabel, u32, u32), u32>,
    bottom: Option<u32>,
}

impl Builder {
    fn vertex(&mut self, label: VertexLabel) -> u32 {
        self.labels.push(label);
        (self.labels.len() - 1) as u32
    }

    fn edge(&mut self, source: u32, target: u32, label: EdgeLabel) {
        self.edges.push(Edge { source, target, label });
    }

    fn add(&mut self, f: &Formula) -> u32 {
        match f.kind() {
            Kind::Var(v) => {
                if let Some(&id) = self.vars.get(v) {
                    return id;
                }
                let id = self.vertex(VertexLabel::Var);
                self.vars.insert(*v, id);
                id
            }
            Kind::Bottom => {
                if self.format == GraphFormat::Tm {
                    if let Some(id) = self.bottom {
                        return id;
                    }
                }
                let id = self.vertex(VertexLabel::Bottom);
                self.bottom = Some(id);
                id
            }
            Kind::And(a, b) | Kind::Or(a, b) | Kind::Imp(a, b) => {
                let label = match f.kind() {
                    Kind::And(..) => VertexLabel::And,
                    Kind::Or(..) => VertexLabel::Or,
                    _ => VertexLabel::Imp,
                };
                let l = self.add(a);
                let r = self.add(b);
                if self.format == GraphFormat::Tm {
                    if let Some(&id) = self.terms.get(&(label, l, r)) {
                        return id;
                    }
                }
                let id = self.vertex(label);
                self.edge(id, l, EdgeLabel::Left);
                self.edge(id, r, EdgeLabel::Right);
                if self.format == GraphFormat::Tm {
                    self.terms.insert((label, l, r), id);
                }
                id
            }
        }
    }
}

pub fn encode(s: &Sequent, format: GraphFormat) -> LabeledGraph {
    let (ants, cons) = canonical_form(s);
    let mut b = Builder {
        format,
        labels: Vec::new(),
        edges: Vec::new(),
        vars: HashMap::new(),
        terms: HashMap::new(),
        bottom: None,
    };
    let c = b.add(&cons);
    let a: Vec<u32> = ants.iter().map(|f| b.add(f)).collect();
    let root = b.vertex(VertexLabel::Root);
    b.edge(root, c, EdgeLabel::Right);
    for t in a {
        b.edge(root, t, EdgeLabel::Left);
    }
    LabeledGraph {
        labels: b.labels,
        edges: b.edges,
        root,
    }
}

pub fn to_vm_graph(s: &Sequent) -> LabeledGraph {
    encode(s, GraphFormat::Vm)
}

pub fn to_tm_graph(s: &Sequent) -> LabeledGraph {
    encode(s, GraphFormat::Tm)
}
