#![allow(dead_code)]

pub mod lj_oracle;

use iplrl::syntax::{Formula, Sequent};
use rand::Rng;

/// All formulas over `P1..Pvars` and `false`, grouped by length
/// (`by_len[l]` holds the formulas of length `l`), up to `max_len`.
pub fn formulas_by_length(max_len: usize, vars: u32) -> Vec<Vec<Formula>> {
    let mut by_len: Vec<Vec<Formula>> = vec![Vec::new(); max_len + 1];
    if max_len == 0 {
        return by_len;
    }
    by_len[1] = (1..=vars).map(Formula::var).chain([Formula::bottom()]).collect();
    for len in 2..=max_len {
        let mut out = Vec::new();
        for left_len in 1..len - 1 {
            let right_len = len - 1 - left_len;
            for a in &by_len[left_len] {
                for b in &by_len[right_len] {
                    out.push(Formula::and(a.clone(), b.clone()));
                    out.push(Formula::or(a.clone(), b.clone()));
                    out.push(Formula::imp(a.clone(), b.clone()));
                }
            }
        }
        by_len[len] = out;
    }
    by_len
}

/// Streams every formula of length `<= max_len` without materialising the
/// longest layer.
pub fn for_each_formula(max_len: usize, vars: u32, mut visit: impl FnMut(&Formula)) {
    let inner = formulas_by_length(max_len.saturating_sub(2), vars);
    for layer in &inner {
        for f in layer {
            visit(f);
        }
    }
    for len in [max_len - 1, max_len] {
        if len < 3 || len <= max_len.saturating_sub(2) {
            continue;
        }
        for left_len in 1..len - 1 {
            let right_len = len - 1 - left_len;
            for a in &inner[left_len] {
                for b in &inner[right_len] {
                    visit(&Formula::and(a.clone(), b.clone()));
                    visit(&Formula::or(a.clone(), b.clone()));
                    visit(&Formula::imp(a.clone(), b.clone()));
                }
            }
        }
    }
}

/// Random formula with roughly `size` symbols over `vars` variables.
pub fn random_formula<R: Rng>(rng: &mut R, size: usize, vars: u32) -> Formula {
    if size <= 1 {
        return if rng.random_bool(0.1) {
            Formula::bottom()
        } else {
            Formula::var(rng.random_range(1..=vars))
        };
    }
    let left = rng.random_range(0..size);
    let a = random_formula(rng, left, vars);
    let b = random_formula(rng, size - 1 - left, vars);
    match rng.random_range(0..3) {
        0 => Formula::and(a, b),
        1 => Formula::or(a, b),
        _ => Formula::imp(a, b),
    }
}

pub fn random_sequent<R: Rng>(rng: &mut R, max_size: usize, vars: u32) -> Sequent {
    let n = rng.random_range(0..4);
    let ants = (0..n)
        .map(|_| {
            let size = rng.random_range(1..=max_size);
            random_formula(rng, size, vars)
        })
        .collect();
    let size = rng.random_range(1..=max_size);
    Sequent::new(ants, random_formula(rng, size, vars))
}
