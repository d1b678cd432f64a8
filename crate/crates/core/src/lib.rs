//! Value-function-guided proof search for intuitionistic propositional logic.
//!
//! The crate is organised bottom-up:
//!
//! * [`syntax`]: formulas, sequents, parsing and printing.
//! * [`calculus`]: the LJT rules, a decision procedure and a proof checker.
//! * [`search`]: the proof-search MDP, policies, rollouts and greedy DFS.
//! * [`graphenc`]: sequent-to-graph encodings (variable and term merging).
//! * [`valuemodel`]: bag-of-words and gated GNN value functions with training.
//! * [`augment`]: breadth-first data augmentation from library theorems.
//! * [`generator`]: random formulas and theorem libraries.
//! * [`pipeline`]: approximate policy iteration and benchmarking.

pub mod augment;
pub mod calculus;
pub mod generator;
pub mod graphenc;
pub mod pipeline;
pub mod search;
pub mod syntax;
pub mod valuemodel;

pub use calculus::{apply_rule, check_proof, decide, enumerate_actions, Decision, ProofTree, RuleId, RuleInstance};
pub use syntax::{parse_formula, parse_sequent, Formula, Sequent};
