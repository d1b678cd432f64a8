//! The contraction-free sequent calculus LJT.
//!
//! Rules are stated bottom-up: [`apply_rule`] maps a conclusion to its
//! premises. The four implication-left rules replace the LJ rule that keeps
//! its principal formula, which makes every root-first search finite.

mod decide;
mod proof;

pub use decide::{decide, Decider, Decision};
pub use proof::{check_proof, parse_proof, ProofCheckError, ProofFormatError, ProofTree};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::syntax::{Formula, Kind, Sequent};

/// LJT rule names in enumeration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleId {
    Init,
    BotLeft,
    AndLeft,
    AndRight,
    OrLeft,
    OrRight1,
    OrRight2,
    ImpRight,
    ImpLeftAtom,
    ImpLeftAnd,
    ImpLeftOr,
    ImpLeftImp,
}

impl RuleId {
    pub const ALL: [RuleId; 12] = [
        RuleId::Init,
        RuleId::BotLeft,
        RuleId::AndLeft,
        RuleId::AndRight,
        RuleId::OrLeft,
        RuleId::OrRight1,
        RuleId::OrRight2,
        RuleId::ImpRight,
        RuleId::ImpLeftAtom,
        RuleId::ImpLeftAnd,
        RuleId::ImpLeftOr,
        RuleId::ImpLeftImp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleId::Init => "Init",
            RuleId::BotLeft => "BotLeft",
            RuleId::AndLeft => "AndLeft",
            RuleId::AndRight => "AndRight",
            RuleId::OrLeft => "OrLeft",
            RuleId::OrRight1 => "OrRight1",
            RuleId::OrRight2 => "OrRight2",
            RuleId::ImpRight => "ImpRight",
            RuleId::ImpLeftAtom => "ImpLeftAtom",
            RuleId::ImpLeftAnd => "ImpLeftAnd",
            RuleId::ImpLeftOr => "ImpLeftOr",
            RuleId::ImpLeftImp => "ImpLeftImp",
        }
    }

    /// Right rules act on the consequent and carry no principal position.
    pub fn is_right_rule(self) -> bool {
        matches!(
            self,
            RuleId::AndRight | RuleId::OrRight1 | RuleId::OrRight2 | RuleId::ImpRight
        )
    }

    pub fn is_axiom(self) -> bool {
        matches!(self, RuleId::Init | RuleId::BotLeft)
    }

    /// Whether the conclusion is provable exactly when all premises are.
    pub fn is_invertible(self) -> bool {
        !matches!(self, RuleId::OrRight1 | RuleId::OrRight2 | RuleId::ImpLeftImp)
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleId::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown rule {s:?}"))
    }
}

/// A rule together with the position of its principal antecedent
/// (0-based, in canonical order; `None` for right rules).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleInstance {
    pub rule: RuleId,
    pub principal: Option<usize>,
}

impl RuleInstance {
    pub fn right(rule: RuleId) -> Self {
        RuleInstance { rule, principal: None }
    }

    pub fn left(rule: RuleId, principal: usize) -> Self {
        RuleInstance {
            rule,
            principal: Some(principal),
        }
    }
}

impl fmt::Display for RuleInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.principal {
            Some(p) => write!(f, "{} {}", self.rule, p),
            None => write!(f, "{}", self.rule),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{rule} is not applicable to `{sequent}`: {reason}")]
pub struct RuleError {
    pub rule: RuleInstance,
    pub sequent: String,
    pub reason: &'static str,
}

/// All LJT rule instances whose conclusion matches `s`, in rule order then
/// by principal position. Only the first copy of a repeated antecedent
/// yields actions.
pub fn enumerate_actions(s: &Sequent) -> Vec<RuleInstance> {
    let ants = s.antecedents();
    let goal = s.consequent();
    let mut out = Vec::new();
    let distinct = |i: usize| i == 0 || ants[i - 1] != ants[i];

    if let Some(i) = ants.iter().position(|a| a == goal) {
        out.push(RuleInstance::left(RuleId::Init, i));
    }
    if let Some(i) = ants.iter().position(Formula::is_bottom) {
        out.push(RuleInstance::left(RuleId::BotLeft, i));
    }
    for (i, a) in ants.iter().enumerate() {
        if matches!(a.kind(), Kind::And(..)) && distinct(i) {
            out.push(RuleInstance::left(RuleId::AndLeft, i));
        }
    }
    if matches!(goal.kind(), Kind::And(..)) {
        out.push(RuleInstance::right(RuleId::AndRight));
    }
    for (i, a) in ants.iter().enumerate() {
        if matches!(a.kind(), Kind::Or(..)) && distinct(i) {
            out.push(RuleInstance::left(RuleId::OrLeft, i));
        }
    }
    if matches!(goal.kind(), Kind::Or(..)) {
        out.push(RuleInstance::right(RuleId::OrRight1));
        out.push(RuleInstance::right(RuleId::OrRight2));
    }
    if matches!(goal.kind(), Kind::Imp(..)) {
        out.push(RuleInstance::right(RuleId::ImpRight));
    }
    for rule in [
        RuleId::ImpLeftAtom,
        RuleId::ImpLeftAnd,
        RuleId::ImpLeftOr,
        RuleId::ImpLeftImp,
    ] {
        for (i, a) in ants.iter().enumerate() {
            if !distinct(i) {
                continue;
            }
            let Kind::Imp(lhs, _) = a.kind() else { continue };
            let fires = match (rule, lhs.kind()) {
                (RuleId::ImpLeftAtom, Kind::Var(_) | Kind::Bottom) => ants.contains(lhs),
                (RuleId::ImpLeftAnd, Kind::And(..)) => true,
                (RuleId::ImpLeftOr, Kind::Or(..)) => true,
                (RuleId::ImpLeftImp, Kind::Imp(..)) => true,
                _ => false,
            };
            if fires {
                out.push(RuleInstance::left(rule, i));
            }
        }
    }
    out
}

/// Premises of `r` applied to `s`, top-to-bottom and left-to-right.
pub fn apply_rule(s: &Sequent, r: &RuleInstance) -> Result<Vec<Sequent>, RuleError> {
    let fail = |reason: &'static str| RuleError {
        rule: *r,
        sequent: s.to_string(),
        reason,
    };
    let ants = s.antecedents();
    let goal = s.consequent();

    if r.rule.is_right_rule() {
        if r.principal.is_some() {
            return Err(fail("right rules take no principal position"));
        }
        return match (r.rule, goal.kind()) {
            (RuleId::AndRight, Kind::And(a, b)) => Ok(vec![
                s.replace(None, &[], a.clone()),
                s.replace(None, &[], b.clone()),
            ]),
            (RuleId::OrRight1, Kind::Or(a, _)) => Ok(vec![s.replace(None, &[], a.clone())]),
            (RuleId::OrRight2, Kind::Or(_, b)) => Ok(vec![s.replace(None, &[], b.clone())]),
            (RuleId::ImpRight, Kind::Imp(a, b)) => Ok(vec![s.replace(None, &[a.clone()], b.clone())]),
            _ => Err(fail("consequent has the wrong main connective")),
        };
    }

    let i = r.principal.ok_or_else(|| fail("left rules need a principal position"))?;
    let principal = ants.get(i).ok_or_else(|| fail("principal position out of range"))?;
    let g = goal.clone();
    match (r.rule, principal.kind()) {
        (RuleId::Init, _) if principal == goal => Ok(vec![]),
        (RuleId::Init, _) => Err(fail("principal formula differs from the consequent")),
        (RuleId::BotLeft, Kind::Bottom) => Ok(vec![]),
        (RuleId::AndLeft, Kind::And(a, b)) => Ok(vec![s.replace(Some(i), &[a.clone(), b.clone()], g)]),
        (RuleId::OrLeft, Kind::Or(a, b)) => Ok(vec![
            s.replace(Some(i), &[a.clone()], g.clone()),
            s.replace(Some(i), &[b.clone()], g),
        ]),
        (RuleId::ImpLeftAtom, Kind::Imp(p, b)) if p.is_atomic() => {
            if ants.iter().enumerate().any(|(j, a)| j != i && a == p) {
                Ok(vec![s.replace(Some(i), &[b.clone()], g)])
            } else {
                Err(fail("the atom is not among the antecedents"))
            }
        }
        (RuleId::ImpLeftAnd, Kind::Imp(cd, b)) => match cd.kind() {
            Kind::And(c, d) => {
                let curried = Formula::imp(c.clone(), Formula::imp(d.clone(), b.clone()));
                Ok(vec![s.replace(Some(i), &[curried], g)])
            }
            _ => Err(fail("principal formula is not (C & D) -> B")),
        },
        (RuleId::ImpLeftOr, Kind::Imp(cd, b)) => match cd.kind() {
            Kind::Or(c, d) => {
                let split = [Formula::imp(c.clone(), b.clone()), Formula::imp(d.clone(), b.clone())];
                Ok(vec![s.replace(Some(i), &split, g)])
            }
            _ => Err(fail("principal formula is not (C | D) -> B")),
        },
        (RuleId::ImpLeftImp, Kind::Imp(cd, b)) => match cd.kind() {
            Kind::Imp(c, d) => Ok(vec![
                s.replace(Some(i), &[Formula::imp(d.clone(), b.clone())], Formula::imp(c.clone(), d.clone())),
                s.replace(Some(i), &[b.clone()], g),
            ]),
            _ => Err(fail("principal formula is not (C -> D) -> B")),
        },
        _ => Err(fail("principal formula has the wrong shape")),
    }
}

/// Closed by `Init` or `BotLeft` alone.
pub fn is_one_step_provable(s: &Sequent) -> bool {
    s.antecedents()
        .iter()
        .any(|a| a.is_bottom() || a == s.consequent())
}

/// Termination weight: atoms 1, `->` and `|` add 1, `&` adds 2.
pub fn weight(f: &Formula) -> u64 {
    match f.kind() {
        Kind::Var(_) | Kind::Bottom => 1,
        Kind::Imp(a, b) | Kind::Or(a, b) => weight(a) + weight(b) + 1,
        Kind::And(a, b) => weight(a) + weight(b) + 2,
    }
}

/// Per-formula weights of antecedents and consequent, sorted ascending.
pub fn weight_multiset(s: &Sequent) -> Vec<u64> {
    let mut w: Vec<u64> = s.antecedents().iter().map(weight).collect();
    w.push(weight(s.consequent()));
    w.sort_unstable();
    w
}

/// Strict Dershowitz–Manna multiset order over naturals: `smaller < larger`
/// iff they differ and every element with surplus multiplicity in `smaller`
/// is dominated by some element with surplus multiplicity in `larger`.
pub fn multiset_less(smaller: &[u64], larger: &[u64]) -> bool {
    use std::collections::BTreeMap;
    let mut diff: BTreeMap<u64, i64> = BTreeMap::new();
    for &x in smaller {
        *diff.entry(x).or_default() += 1;
    }
    for &x in larger {
        *diff.entry(x).or_default() -= 1;
    }
    diff.retain(|_, d| *d != 0);
    if diff.is_empty() {
        return false;
    }
    diff.iter()
        .filter(|(_, &d)| d > 0)
        .all(|(&x, _)| diff.iter().any(|(&y, &d)| d < 0 && y > x))
}
