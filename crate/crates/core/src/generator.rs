//! Random formulas and theorem libraries.

use std::fmt::Write as _;
use std::io::{self, BufRead};
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use thiserror::Error;

use crate::calculus::{check_proof, Decider, Decision};
use crate::syntax::{parse_formula, Formula, Kind, Sequent};

/// Operator probabilities `(and, or, imp, not)`.
pub type OpProbs = [f64; 4];

/// Top-down generation for desired length `n` over `P1..Pm`.
///
/// Lengths here count `~A` as one symbol more than `A`; use
/// [`surface_length`] to measure generated formulas the same way.
pub fn random_formula<R: Rng + ?Sized>(n: usize, m: u32, q: &OpProbs, rng: &mut R) -> Formula {
    assert!(n >= 1 && m >= 1, "need n >= 1 and m >= 1");
    if n <= 2 {
        return Formula::var(rng.random_range(1..=m));
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut op = 3;
    for (i, p) in q.iter().enumerate() {
        acc += p;
        if u < acc {
            op = i;
            break;
        }
    }
    if op == 3 {
        return Formula::not(random_formula(n - 1, m, q, rng));
    }
    let x = rng.random_range(1..=n - 2);
    let b = random_formula(x, m, q, rng);
    let c = random_formula(n - 1 - x, m, q, rng);
    match op {
        0 => Formula::and(b, c),
        1 => Formula::or(b, c),
        _ => Formula::imp(b, c),
    }
}

/// Length with each `A -> false` counted as the negation `~A`, i.e. one
/// symbol less than [`Formula::length`].
pub fn surface_length(f: &Formula) -> usize {
    match f.kind() {
        Kind::Var(_) | Kind::Bottom => 1,
        Kind::Imp(a, b) if b.is_bottom() => 1 + surface_length(a),
        Kind::And(a, b) | Kind::Or(a, b) | Kind::Imp(a, b) => 1 + surface_length(a) + surface_length(b),
    }
}

/// A symmetric Dirichlet draw from four normalised Gamma(alpha, 1) samples.
pub fn sample_op_probs<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> OpProbs {
    let g = Gamma::new(alpha, 1.0).expect("alpha must be positive and finite");
    let mut q = [0.0; 4];
    loop {
        for x in &mut q {
            *x = g.sample(rng);
        }
        let s: f64 = q.iter().sum();
        if s > 0.0 {
            for x in &mut q {
                *x /= s;
            }
            return q;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LibraryConfig {
    pub count: usize,
    pub length: RangeInclusive<usize>,
    pub vars: RangeInclusive<u32>,
    pub dirichlet_alpha: f64,
    /// Sequents the decision procedure may expand per candidate.
    pub decide_budget: usize,
    /// Give up after this many candidates.
    pub max_attempts: usize,
    pub seed: u64,
}

impl LibraryConfig {
    /// Small training-library parameters for single-machine runs.
    pub fn desk(count: usize, seed: u64) -> LibraryConfig {
        LibraryConfig {
            count,
            length: 10..=30,
            vars: 2..=5,
            dirichlet_alpha: 3.0,
            decide_budget: 100_000,
            max_attempts: 1_000_000,
            seed,
        }
    }

    /// Harder parameters for an exam set.
    pub fn desk_exam(count: usize, seed: u64) -> LibraryConfig {
        LibraryConfig {
            length: 30..=50,
            vars: 2..=6,
            ..LibraryConfig::desk(count, seed)
        }
    }

    /// Training-library parameters at the original scale.
    pub fn full_train(seed: u64) -> LibraryConfig {
        LibraryConfig {
            count: 2000,
            length: 50..=400,
            vars: 2..=20,
            ..LibraryConfig::desk(2000, seed)
        }
    }

    /// Exam-set parameters at the original scale.
    pub fn full_exam(seed: u64) -> LibraryConfig {
        LibraryConfig {
            count: 1000,
            length: 500..=500,
            vars: 2..=20,
            ..LibraryConfig::desk(1000, seed)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LibraryStats {
    pub attempts: usize,
    pub accepted: usize,
    pub unprovable: usize,
    pub budget_exceeded: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LibraryError {
    #[error("only {accepted} of {count} theorems found after {attempts} attempts")]
    Stalled { count: usize, accepted: usize, attempts: usize },
    #[error("empty parameter range")]
    EmptyRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Library {
    /// Goals of the form `|- A`.
    pub theorems: Vec<Sequent>,
    pub stats: LibraryStats,
}

enum Verdict {
    Theorem(Formula),
    Unprovable,
    Budget,
}

fn candidate(cfg: &LibraryConfig, index: u64) -> Verdict {
    // Each candidate has its own stream, so filtering can run in parallel.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let n = rng.random_range(cfg.length.clone());
    let m = rng.random_range(cfg.vars.clone());
    let q = sample_op_probs(cfg.dirichlet_alpha, &mut rng);
    let f = random_formula(n, m, &q, &mut rng);
    let goal = Sequent::goal(f.clone());
    match Decider::new(cfg.decide_budget).decide(&goal) {
        Decision::Provable(proof) => {
            check_proof(&proof, &goal).expect("decided proofs check");
            Verdict::Theorem(f)
        }
        Decision::Unprovable => Verdict::Unprovable,
        Decision::BudgetExceeded => Verdict::Budget,
    }
}

/// Samples candidates until `count` distinct theorems are found. Candidates
/// whose decision runs out of budget are rejected.
pub fn build_library(cfg: &LibraryConfig) -> Result<Library, LibraryError> {
    if cfg.length.is_empty() || cfg.vars.is_empty() || *cfg.length.start() == 0 || *cfg.vars.start() == 0 {
        return Err(LibraryError::EmptyRange);
    }
    let mut stats = LibraryStats::default();
    let mut theorems = Vec::with_capacity(cfg.count);
    let mut seen = std::collections::HashSet::new();
    let chunk = (rayon::current_num_threads() * 4).max(8);
    while theorems.len() < cfg.count {
        if stats.attempts >= cfg.max_attempts {
            return Err(LibraryError::Stalled {
                count: cfg.count,
                accepted: theorems.len(),
                attempts: stats.attempts,
            });
        }
        let start = stats.attempts as u64;
        let end = (stats.attempts + chunk).min(cfg.max_attempts) as u64;
        let verdicts: Vec<Verdict> = (start..end).into_par_iter().map(|i| candidate(cfg, i)).collect();
        for v in verdicts {
            if theorems.len() == cfg.count {
                break;
            }
            stats.attempts += 1;
            match v {
                Verdict::Theorem(f) => {
                    if seen.insert(f.clone()) {
                        stats.accepted += 1;
                        theorems.push(Sequent::goal(f));
                    } else {
                        stats.duplicates += 1;
                    }
                }
                Verdict::Unprovable => stats.unprovable += 1,
                Verdict::Budget => stats.budget_exceeded += 1,
            }
        }
    }
    Ok(Library { theorems, stats })
}

/// Library file: `#` header lines, then one formula per line.
pub fn format_library(lib: &Library, cfg: &LibraryConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# count={} length={}..={} vars={}..={} alpha={} budget={} seed={}",
        cfg.count,
        cfg.length.start(),
        cfg.length.end(),
        cfg.vars.start(),
        cfg.vars.end(),
        cfg.dirichlet_alpha,
        cfg.decide_budget,
        cfg.seed
    );
    let st = &lib.stats;
    let _ = writeln!(
        s,
        "# attempts={} unprovable={} budget_exceeded={} duplicates={}",
        st.attempts, st.unprovable, st.budget_exceeded, st.duplicates
    );
    for t in &lib.theorems {
        let _ = writeln!(s, "{}", t.consequent());
    }
    s
}

#[derive(Debug, Error)]
pub enum LibraryReadError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Reads one goal formula per line; blank lines and `#` comments are skipped.
pub fn read_library<R: BufRead>(r: R) -> Result<Vec<Sequent>, LibraryReadError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let f = parse_formula(t).map_err(|e| LibraryReadError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(Sequent::goal(f));
    }
    Ok(out)
}
