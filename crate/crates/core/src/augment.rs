//! Training data from library theorems by breadth-first expansion.
//!
//! For every theorem the current policy can prove, sequents reachable by
//! single rule applications are visited breadth first and each is labelled
//! with the return of a fresh policy rollout.

use std::collections::{BTreeSet, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::calculus::{apply_rule, enumerate_actions, is_one_step_provable};
use crate::search::{rollout, Memoized, PolicyKind, SearchConfig};
use crate::syntax::Sequent;
use crate::valuemodel::Example;

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    /// Cap on examples that are not one-step provable, per theorem.
    pub n_ge2: usize,
    /// Cap on one-step-provable examples, per theorem.
    pub n_eq1: usize,
    /// Discount and step limit of the labelling rollouts.
    pub search: SearchConfig,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            n_ge2: 1000,
            n_eq1: 100,
            search: SearchConfig::default(),
        }
    }
}

fn label(p: &Sequent, policy: PolicyKind<'_>, cfg: &SearchConfig) -> f64 {
    rollout(p, policy.instantiate().as_mut(), cfg).discounted_return(cfg.gamma)
}

/// Examples derived from theorem `p`, in dequeue order, with origin 0.
/// Empty if `policy` cannot prove `p`.
pub fn augment_from_theorem(p: &Sequent, policy: PolicyKind<'_>, cfg: &AugmentConfig) -> Vec<Example> {
    let memo;
    let policy = match policy {
        PolicyKind::Value(m) => {
            memo = Memoized::new(m);
            PolicyKind::Value(&memo)
        }
        other => other,
    };
    let first = label(p, policy, &cfg.search);
    if first == 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let (mut n_ge2, mut n_eq1) = (0, 0);
    let mut visited: HashSet<Sequent> = HashSet::new();
    let mut queue: VecDeque<(Sequent, usize)> = VecDeque::from([(p.clone(), 0)]);
    while n_ge2 < cfg.n_ge2 {
        let Some((q, depth)) = queue.pop_front() else { break };
        if !visited.insert(q.clone()) {
            continue;
        }
        let one_step = is_one_step_provable(&q);
        if !one_step || n_eq1 < cfg.n_eq1 {
            let ret = if depth == 0 { first } else { label(&q, policy, &cfg.search) };
            out.push(Example {
                sequent: q.clone(),
                ret,
                origin: 0,
                one_step,
                depth,
            });
            if one_step {
                n_eq1 += 1;
            } else {
                n_ge2 += 1;
            }
        }
        for action in enumerate_actions(&q) {
            for child in apply_rule(&q, &action).expect("enumerated actions apply") {
                if !visited.contains(&child) {
                    queue.push_back((child, depth + 1));
                }
            }
        }
    }
    out
}

/// Union of [`augment_from_theorem`] over the library; each example's origin
/// is the index of its theorem. Theorems are processed in parallel and
/// merged in library order.
pub fn build_dataset(library: &[Sequent], policy: PolicyKind<'_>, cfg: &AugmentConfig) -> Vec<Example> {
    let parts: Vec<Vec<Example>> = library
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut ex = augment_from_theorem(p, policy, cfg);
            for e in &mut ex {
                e.origin = i;
            }
            ex
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Library theorems the policy proves, labelled with their rollout return.
/// This is the training set when augmentation is switched off.
pub fn library_examples(library: &[Sequent], policy: PolicyKind<'_>, cfg: &SearchConfig) -> Vec<Example> {
    let labels: Vec<f64> = library.par_iter().map(|p| label(p, policy, cfg)).collect();
    library
        .iter()
        .zip(labels)
        .enumerate()
        .filter(|(_, (_, r))| *r > 0.0)
        .map(|(i, (p, ret))| Example {
            sequent: p.clone(),
            ret,
            origin: i,
            one_step: is_one_step_provable(p),
            depth: 0,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Split {
    pub train: Vec<Example>,
    pub val: Vec<Example>,
    pub test: Vec<Example>,
}

/// Splits by origin in the ratio 4:1:1: origins are shuffled with `seed` and
/// every example follows its origin.
pub fn split_dataset(data: &[Example], seed: u64) -> Split {
    let mut origins: Vec<usize> = data.iter().map(|e| e.origin).collect::<BTreeSet<_>>().into_iter().collect();
    origins.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = origins.len();
    let n_train = (n * 4 + 3) / 6;
    let n_val = (n + 3) / 6;
    let train: HashSet<usize> = origins[..n_train].iter().copied().collect();
    let val: HashSet<usize> = origins[n_train..(n_train + n_val).min(n)].iter().copied().collect();
    let mut split = Split::default();
    for e in data {
        if train.contains(&e.origin) {
            split.train.push(e.clone());
        } else if val.contains(&e.origin) {
            split.val.push(e.clone());
        } else {
            split.test.push(e.clone());
        }
    }
    split
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::discount;
    use crate::syntax::parse_sequent;

    fn seq(s: &str) -> Sequent {
        parse_sequent(s).unwrap()
    }

    #[test]
    fn axiom_theorem_yields_itself() {
        let ex = augment_from_theorem(&seq("P1 |- P1"), PolicyKind::NaiveGreedy, &AugmentConfig::default());
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].ret, 0.95);
        assert!(ex[0].one_step);
    }

    #[test]
    fn unprovable_theorem_yields_nothing() {
        let ex = augment_from_theorem(&seq("|- P1 | ~P1"), PolicyKind::NaiveGreedy, &AugmentConfig::default());
        assert!(ex.is_empty());
    }

    #[test]
    fn swap_theorem_by_hand() {
        let ex = augment_from_theorem(&seq("|- P1 & P2 -> P2 & P1"), PolicyKind::NaiveGreedy, &AugmentConfig::default());
        let rows: Vec<(String, f64, bool, usize)> = ex
            .iter()
            .map(|e| (e.sequent.to_string(), e.ret, e.one_step, e.depth))
            .collect();
        let g = |n| discount(0.95, n);
        let expected = vec![
            ("|- P1 & P2 -> P2 & P1".to_owned(), g(5), false, 0),
            ("P1 & P2 |- P2 & P1".to_owned(), g(4), false, 1),
            ("P1, P2 |- P2 & P1".to_owned(), g(3), false, 2),
            ("P1 & P2 |- P2".to_owned(), g(2), false, 2),
            ("P1 & P2 |- P1".to_owned(), g(2), false, 2),
            ("P1, P2 |- P2".to_owned(), g(1), true, 3),
            ("P1, P2 |- P1".to_owned(), g(1), true, 3),
        ];
        assert_eq!(rows, expected);
    }

    #[test]
    fn caps_stop_the_search() {
        let cfg = AugmentConfig {
            n_ge2: 2,
            n_eq1: 0,
            ..AugmentConfig::default()
        };
        let ex = augment_from_theorem(&seq("|- P1 & P2 -> P2 & P1"), PolicyKind::NaiveGreedy, &cfg);
        assert_eq!(ex.len(), 2);
        assert!(ex.iter().all(|e| !e.one_step));
    }

    #[test]
    fn dataset_origins_and_split() {
        let lib: Vec<Sequent> = (1..=6).map(|i| seq(&format!("P{i} |- P{i}"))).collect();
        let d = build_dataset(&lib, PolicyKind::NaiveGreedy, &AugmentConfig::default());
        assert_eq!(d.len(), 6);
        assert_eq!(d.iter().map(|e| e.origin).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4, 5]);
        let s = split_dataset(&d, 3);
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (4, 1, 1));
        assert_eq!(s, split_dataset(&d, 3));
        assert!(build_dataset(&[], PolicyKind::NaiveGreedy, &AugmentConfig::default()).is_empty());
    }
}
