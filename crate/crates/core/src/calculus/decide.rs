use std::collections::HashMap;

use super::{apply_rule, enumerate_actions, ProofTree, RuleInstance};
use crate::syntax::Sequent;

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Provable(ProofTree),
    Unprovable,
    BudgetExceeded,
}

impl Decision {
    pub fn is_provable(&self) -> bool {
        matches!(self, Decision::Provable(_))
    }
}

struct OutOfBudget;

/// Exhaustive LJT search with memoization on sequents.
///
/// Actions are tried in [`enumerate_actions`] order. A failed invertible
/// rule refutes the sequent outright, so later alternatives are skipped.
pub struct Decider {
    budget: usize,
    visited: usize,
    // Some(rule) = provable, closed by that rule; None = unprovable.
    memo: HashMap<Sequent, Option<RuleInstance>>,
}

impl Decider {
    pub fn new(budget: usize) -> Self {
        assert!(budget >= 1, "decision budget must be positive");
        Decider {
            budget,
            visited: 0,
            memo: HashMap::new(),
        }
    }

    /// Number of distinct sequents expanded so far.
    pub fn visited(&self) -> usize {
        self.visited
    }

    pub fn decide(&mut self, goal: &Sequent) -> Decision {
        match self.provable(goal) {
            Ok(true) => Decision::Provable(self.build(goal)),
            Ok(false) => Decision::Unprovable,
            Err(OutOfBudget) => Decision::BudgetExceeded,
        }
    }

    fn provable(&mut self, s: &Sequent) -> Result<bool, OutOfBudget> {
        if let Some(entry) = self.memo.get(s) {
            return Ok(entry.is_some());
        }
        if self.visited >= self.budget {
            return Err(OutOfBudget);
        }
        self.visited += 1;
        let mut result = None;
        for action in enumerate_actions(s) {
            let premises = apply_rule(s, &action).expect("enumerated actions apply");
            let mut closed = true;
            for p in &premises {
                if !self.provable(p)? {
                    closed = false;
                    break;
                }
            }
            if closed {
                result = Some(action);
                break;
            }
            if action.rule.is_invertible() {
                break;
            }
        }
        self.memo.insert(s.clone(), result);
        Ok(result.is_some())
    }

    fn build(&self, s: &Sequent) -> ProofTree {
        let rule = self.memo[s].expect("only provable sequents are rebuilt");
        let children = apply_rule(s, &rule)
            .expect("memoized rule applies")
            .iter()
            .map(|p| self.build(p))
            .collect();
        ProofTree {
            sequent: s.clone(),
            rule,
            children,
        }
    }
}

/// Decides `goal`, expanding at most `budget` distinct sequents.
pub fn decide(goal: &Sequent, budget: usize) -> Decision {
    Decider::new(budget).decide(goal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::check_proof;
    use crate::syntax::parse_sequent;

    fn verdict(text: &str) -> Decision {
        decide(&parse_sequent(text).unwrap(), 1_000_000)
    }

    #[test]
    fn identity_takes_two_rules() {
        let goal = parse_sequent("|- P1 -> P1").unwrap();
        let Decision::Provable(t) = decide(&goal, 100) else {
            panic!("P1 -> P1 must be provable")
        };
        assert_eq!(t.size(), 2);
        check_proof(&t, &goal).unwrap();
    }

    #[test]
    fn classical_principles_are_rejected() {
        assert_eq!(verdict("|- P1 | ~P1"), Decision::Unprovable);
        assert_eq!(verdict("|- ((P1 -> P2) -> P1) -> P1"), Decision::Unprovable);
        assert_eq!(verdict("|- ~~P1 -> P1"), Decision::Unprovable);
    }

    #[test]
    fn intuitionistic_theorems_are_found() {
        for text in [
            "|- ~~(P1 | ~P1)",
            "|- P1 & P2 -> P2 & P1",
            "|- (P1 -> P2) -> (P2 -> P3) -> P1 -> P3",
            "|- P1 -> ~~P1",
            "|- ~~~P1 -> ~P1",
            "|- (P1 | P2 -> P3) -> (P1 -> P3) & (P2 -> P3)",
            "|- ((P1 -> P2) -> P1) -> (P1 -> P2) -> P2",
        ] {
            let goal = parse_sequent(text).unwrap();
            match decide(&goal, 1_000_000) {
                Decision::Provable(t) => check_proof(&t, &goal).unwrap(),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn budget_is_reported() {
        let goal = parse_sequent("|- ((P1 -> P2) -> P1) -> P1").unwrap();
        assert_eq!(decide(&goal, 1), Decision::BudgetExceeded);
    }
}
