//! Naive LJ prover with set antecedents and branch loop checking.
//!
//! Used only as a reference for the LJT decision procedure. It shares no code
//! with the calculus module: formulas are interned into a local table of
//! subformulas and sequents become `(antecedent bitmask, consequent id)`.

use std::collections::{HashMap, HashSet};

use iplrl::syntax::{Formula, Kind};

#[derive(Clone, Copy)]
enum Node {
    Atom,
    And(u8, u8),
    Or(u8, u8),
    Imp(u8, u8),
}

pub struct LjOracle {
    nodes: Vec<Node>,
    bottom: Option<u8>,
    proven: HashSet<(u64, u8)>,
    history: Vec<(u64, u8)>,
}

impl LjOracle {
    fn intern(&mut self, f: &Formula, ids: &mut HashMap<String, u8>) -> u8 {
        if let Some(&id) = ids.get(f.text()) {
            return id;
        }
        let node = match f.kind() {
            Kind::Var(_) | Kind::Bottom => Node::Atom,
            Kind::And(a, b) => Node::And(self.intern(a, ids), self.intern(b, ids)),
            Kind::Or(a, b) => Node::Or(self.intern(a, ids), self.intern(b, ids)),
            Kind::Imp(a, b) => Node::Imp(self.intern(a, ids), self.intern(b, ids)),
        };
        let id = u8::try_from(self.nodes.len()).expect("at most 64 subformulas");
        assert!(id < 64, "at most 64 subformulas");
        self.nodes.push(node);
        if f.is_bottom() {
            self.bottom = Some(id);
        }
        ids.insert(f.text().to_owned(), id);
        id
    }

    /// Provability of `antecedents => goal` in LJ.
    pub fn provable(antecedents: &[Formula], goal: &Formula) -> bool {
        let mut oracle = LjOracle {
            nodes: Vec::new(),
            bottom: None,
            proven: HashSet::new(),
            history: Vec::new(),
        };
        let mut ids = HashMap::new();
        let g = oracle.intern(goal, &mut ids);
        let mut mask = 0u64;
        for a in antecedents {
            mask |= 1 << oracle.intern(a, &mut ids);
        }
        oracle.prove(mask, g)
    }

    fn prove(&mut self, mask: u64, goal: u8) -> bool {
        if mask & (1 << goal) != 0 {
            return true;
        }
        if let Some(b) = self.bottom {
            if mask & (1 << b) != 0 {
                return true;
            }
        }
        if self.proven.contains(&(mask, goal)) {
            return true;
        }
        if self.history.contains(&(mask, goal)) {
            return false;
        }
        self.history.push((mask, goal));
        let ok = self.search(mask, goal);
        self.history.pop();
        if ok {
            self.proven.insert((mask, goal));
        }
        ok
    }

    fn search(&mut self, mask: u64, goal: u8) -> bool {
        match self.nodes[goal as usize] {
            Node::And(a, b) => {
                if self.prove(mask, a) && self.prove(mask, b) {
                    return true;
                }
            }
            Node::Or(a, b) => {
                if self.prove(mask, a) || self.prove(mask, b) {
                    return true;
                }
            }
            Node::Imp(a, b) => {
                if self.prove(mask | 1 << a, b) {
                    return true;
                }
            }
            Node::Atom => {}
        }
        for i in 0..self.nodes.len() {
            if mask & (1 << i) == 0 {
                continue;
            }
            let rest = mask & !(1 << i);
            let ok = match self.nodes[i] {
                Node::Atom => false,
                Node::And(a, b) => self.prove(rest | 1 << a | 1 << b, goal),
                Node::Or(a, b) => self.prove(rest | 1 << a, goal) && self.prove(rest | 1 << b, goal),
                // The left premise keeps the implication, as in LJ.
                Node::Imp(a, b) => self.prove(mask, a) && self.prove(rest | 1 << b, goal),
            };
            if ok {
                return true;
            }
        }
        false
    }
}
