//! Proof search as a deterministic MDP.
//!
//! A [`State`] is the multiset of sequents still to be proven; an [`Action`]
//! applies one rule instance to one of them. Reaching the empty state earns
//! reward 1, so a successful `n`-step episode has return `gamma^n`.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::calculus::{apply_rule, enumerate_actions, ProofTree, RuleError, RuleInstance};
use crate::syntax::Sequent;

pub const DEFAULT_GAMMA: f64 = 0.95;

/// `gamma^n` by repeated multiplication. Unlike `powi`, the result does not
/// depend on whether the compiler folds the call, so labels are reproducible.
pub fn discount(gamma: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, _| acc * gamma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub gamma: f64,
    /// Actions per episode, or expanded states for greedy DFS.
    pub step_limit: usize,
    /// Wall-clock limit; `None` keeps runs deterministic.
    pub time_limit: Option<Duration>,
    pub backtracking: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            gamma: DEFAULT_GAMMA,
            step_limit: 10_000,
            time_limit: None,
            backtracking: false,
        }
    }
}

/// Open sequents, kept sorted so equal multisets compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct State {
    open: Vec<Sequent>,
}

impl State {
    pub fn new(mut open: Vec<Sequent>) -> State {
        open.sort();
        State { open }
    }

    pub fn single(goal: Sequent) -> State {
        State { open: vec![goal] }
    }

    pub fn open(&self) -> &[Sequent] {
        &self.open
    }

    pub fn is_empty(&self) -> bool {
        self.open.is_empty()
    }

    pub fn len(&self) -> usize {
        self.open.len()
    }

    pub fn total_length(&self) -> usize {
        self.open.iter().map(Sequent::length).sum()
    }

    fn replace(&self, index: usize, premises: Vec<Sequent>) -> State {
        let mut open = Vec::with_capacity(self.open.len() + premises.len());
        open.extend(
            self.open
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != index)
                .map(|(_, s)| s.clone()),
        );
        for p in premises {
            let pos = open.partition_point(|x| x <= &p);
            open.insert(pos, p);
        }
        State { open }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action {
    pub sequent_index: usize,
    pub rule: RuleInstance,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransitionError {
    #[error("sequent index {0} is out of range")]
    NoSuchSequent(usize),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

/// `T(s, a)`: the chosen sequent is replaced by the rule's premises.
pub fn transition(s: &State, a: &Action) -> Result<State, TransitionError> {
    let p = s
        .open
        .get(a.sequent_index)
        .ok_or(TransitionError::NoSuchSequent(a.sequent_index))?;
    let premises = apply_rule(p, &a.rule)?;
    Ok(s.replace(a.sequent_index, premises))
}

pub fn reward(s: &State) -> f64 {
    if s.is_empty() {
        1.0
    } else {
        0.0
    }
}

/// All actions of a state: sequents in canonical order, then rule order.
pub fn state_actions(s: &State) -> Vec<Action> {
    s.open
        .iter()
        .enumerate()
        .flat_map(|(i, p)| {
            enumerate_actions(p).into_iter().map(move |rule| Action {
                sequent_index: i,
                rule,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Value functions

/// A learned or heuristic estimate of the return of a single sequent.
pub trait SequentValue: Sync {
    /// Values for a batch of sequents, in order.
    fn values(&self, batch: &[Sequent]) -> Vec<f64>;
}

impl<T: SequentValue + ?Sized> SequentValue for &T {
    fn values(&self, batch: &[Sequent]) -> Vec<f64> {
        (**self).values(batch)
    }
}

/// `gamma^length(p)`. Maximising the product over a successor state is the
/// same as minimising its total length, so this makes the value-guided
/// searches behave like the naive greedy baseline.
#[derive(Debug, Clone, Copy)]
pub struct LengthHeuristic {
    pub gamma: f64,
}

impl Default for LengthHeuristic {
    fn default() -> Self {
        LengthHeuristic { gamma: DEFAULT_GAMMA }
    }
}

impl SequentValue for LengthHeuristic {
    fn values(&self, batch: &[Sequent]) -> Vec<f64> {
        batch
            .iter()
            .map(|s| discount(self.gamma, s.length()))
            .collect()
    }
}

fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Memoises a fixed model across many proving calls, e.g. all rollouts that
/// label one theorem's examples. Outputs are a pure function of the sequent,
/// so sharing them does not change any search.
pub struct Memoized<'a> {
    inner: &'a dyn SequentValue,
    memo: std::sync::Mutex<HashMap<Sequent, f64>>,
}

impl<'a> Memoized<'a> {
    pub fn new(inner: &'a dyn SequentValue) -> Self {
        Memoized {
            inner,
            memo: std::sync::Mutex::new(HashMap::new()),
        }
    }
}

impl SequentValue for Memoized<'_> {
    fn values(&self, batch: &[Sequent]) -> Vec<f64> {
        let mut memo = self.memo.lock().expect("memo lock");
        let missing: Vec<Sequent> = batch.iter().filter(|s| !memo.contains_key(*s)).cloned().collect();
        if !missing.is_empty() {
            let out = self.inner.values(&missing);
            for (s, v) in missing.into_iter().zip(out) {
                memo.insert(s, v);
            }
        }
        batch.iter().map(|s| memo[s]).collect()
    }
}

/// Per-call memo of clamped model outputs.
#[derive(Default)]
pub struct ValueCache {
    values: HashMap<Sequent, f64>,
    evaluations: usize,
    batches: usize,
}

impl ValueCache {
    /// Evaluates every not-yet-cached sequent of `wanted` in one batch.
    pub fn fill<'s>(&mut self, model: &dyn SequentValue, wanted: impl IntoIterator<Item = &'s Sequent>) {
        let mut seen = HashSet::new();
        let missing: Vec<Sequent> = wanted
            .into_iter()
            .filter(|s| !self.values.contains_key(*s) && seen.insert(*s))
            .cloned()
            .collect();
        if missing.is_empty() {
            return;
        }
        let out = model.values(&missing);
        assert_eq!(out.len(), missing.len(), "model returned a short batch");
        self.evaluations += missing.len();
        self.batches += 1;
        for (s, v) in missing.into_iter().zip(out) {
            self.values.insert(s, clamp_unit(v));
        }
    }

    pub fn get(&self, s: &Sequent) -> Option<f64> {
        self.values.get(s).copied()
    }

    /// Number of sequents sent to the model.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn batches(&self) -> usize {
        self.batches
    }

    fn value(&self, s: &Sequent) -> f64 {
        self.values[s]
    }
}

/// Product of per-sequent values, 1 for the empty state.
pub fn state_value(s: &State, model: &dyn SequentValue) -> f64 {
    let mut cache = ValueCache::default();
    cache.fill(model, s.open());
    s.open.iter().map(|p| cache.value(p)).product()
}

// ---------------------------------------------------------------------------
// Policies

pub trait Policy {
    /// `None` iff the state has no actions.
    fn choose(&mut self, state: &State) -> Option<Action>;
}

/// `pi_0`: the action whose successor state has the least total length.
#[derive(Debug, Default, Clone, Copy)]
pub struct NaiveGreedy;

impl Policy for NaiveGreedy {
    fn choose(&mut self, state: &State) -> Option<Action> {
        naive_greedy_policy(state)
    }
}

pub fn naive_greedy_policy(state: &State) -> Option<Action> {
    let total = state.total_length();
    let mut best: Option<(usize, Action)> = None;
    for (i, p) in state.open.iter().enumerate() {
        for rule in enumerate_actions(p) {
            let premises = apply_rule(p, &rule).expect("enumerated actions apply");
            let next = total - p.length() + premises.iter().map(Sequent::length).sum::<usize>();
            if best.as_ref().is_none_or(|(b, _)| next < *b) {
                best = Some((
                    next,
                    Action {
                        sequent_index: i,
                        rule,
                    },
                ));
            }
        }
    }
    best.map(|(_, a)| a)
}

/// Greedy improvement of a value function: the action whose successor state
/// has the largest product of per-sequent values.
pub struct ValuePolicy<'a> {
    model: &'a dyn SequentValue,
    cache: ValueCache,
}

impl<'a> ValuePolicy<'a> {
    pub fn new(model: &'a dyn SequentValue) -> Self {
        ValuePolicy {
            model,
            cache: ValueCache::default(),
        }
    }

    pub fn cache(&self) -> &ValueCache {
        &self.cache
    }
}

struct Candidate {
    action: Action,
    premises: Vec<Sequent>,
}

fn candidates(state: &State, only: Option<usize>) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (i, p) in state.open.iter().enumerate() {
        if only.is_some_and(|j| j != i) {
            continue;
        }
        for rule in enumerate_actions(p) {
            let premises = apply_rule(p, &rule).expect("enumerated actions apply");
            out.push(Candidate {
                action: Action {
                    sequent_index: i,
                    rule,
                },
                premises,
            });
        }
    }
    out
}

/// Successor-state values for every candidate, filling the cache in one batch.
fn successor_values(state: &State, cands: &[Candidate], model: &dyn SequentValue, cache: &mut ValueCache) -> Vec<f64> {
    cache.fill(
        model,
        state
            .open
            .iter()
            .chain(cands.iter().flat_map(|c| c.premises.iter())),
    );
    let vals: Vec<f64> = state.open.iter().map(|p| cache.value(p)).collect();
    // prefix[i] * suffix[i + 1] is the product over all sequents but i.
    let mut prefix = vec![1.0; vals.len() + 1];
    for (i, v) in vals.iter().enumerate() {
        prefix[i + 1] = prefix[i] * v;
    }
    let mut suffix = vec![1.0; vals.len() + 1];
    for i in (0..vals.len()).rev() {
        suffix[i] = suffix[i + 1] * vals[i];
    }
    cands
        .iter()
        .map(|c| {
            let i = c.action.sequent_index;
            let rest = prefix[i] * suffix[i + 1];
            c.premises.iter().fold(rest, |acc, p| acc * cache.value(p))
        })
        .collect()
}

impl Policy for ValuePolicy<'_> {
    fn choose(&mut self, state: &State) -> Option<Action> {
        let cands = candidates(state, None);
        let values = successor_values(state, &cands, self.model, &mut self.cache);
        let mut best: Option<(f64, Action)> = None;
        for (c, v) in cands.iter().zip(values) {
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, c.action));
            }
        }
        best.map(|(_, a)| a)
    }
}

/// A recipe for a fresh policy per proving call.
#[derive(Clone, Copy)]
pub enum PolicyKind<'a> {
    NaiveGreedy,
    Value(&'a dyn SequentValue),
}

impl<'a> PolicyKind<'a> {
    pub fn instantiate(&self) -> Box<dyn Policy + 'a> {
        match *self {
            PolicyKind::NaiveGreedy => Box::new(NaiveGreedy),
            PolicyKind::Value(m) => Box::new(ValuePolicy::new(m)),
        }
    }
}

// ---------------------------------------------------------------------------
// Episodes

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Proved { steps: usize },
    Stuck { steps: usize },
    BudgetExceeded { steps: usize },
}

impl Outcome {
    pub fn steps(&self) -> usize {
        match *self {
            Outcome::Proved { steps } | Outcome::Stuck { steps } | Outcome::BudgetExceeded { steps } => steps,
        }
    }

    pub fn is_proved(&self) -> bool {
        matches!(self, Outcome::Proved { .. })
    }

    /// `gamma^n` for an `n`-step proof, 0 otherwise.
    pub fn discounted_return(&self, gamma: f64) -> f64 {
        match *self {
            Outcome::Proved { steps } => discount(gamma, steps),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Episode {
    /// `(s_i, a_i)` pairs; the state after the last action is `final_state`.
    pub trace: Vec<(State, Action)>,
    pub final_state: State,
    pub outcome: Outcome,
    pub ret: f64,
}

impl Episode {
    /// Proof trees for the sequents of the start state (in canonical order),
    /// if the episode succeeded.
    pub fn proofs(&self) -> Option<Vec<ProofTree>> {
        if !self.outcome.is_proved() {
            return None;
        }
        let start = self.trace.first().map(|(s, _)| s.clone()).unwrap_or_default();
        let applied: Vec<(Sequent, RuleInstance)> = self
            .trace
            .iter()
            .map(|(s, a)| (s.open[a.sequent_index].clone(), a.rule))
            .collect();
        Some(proofs_from_actions(start.open(), &applied))
    }
}

fn drive(start: State, policy: &mut dyn Policy, cfg: &SearchConfig, mut record: impl FnMut(&State, &Action)) -> (State, Outcome) {
    let clock = Instant::now();
    let mut state = start;
    let mut steps = 0;
    loop {
        if state.is_empty() {
            return (state, Outcome::Proved { steps });
        }
        if steps >= cfg.step_limit || cfg.time_limit.is_some_and(|t| clock.elapsed() >= t) {
            return (state, Outcome::BudgetExceeded { steps });
        }
        let Some(action) = policy.choose(&state) else {
            return (state, Outcome::Stuck { steps });
        };
        record(&state, &action);
        state = transition(&state, &action).expect("policies return valid actions");
        steps += 1;
    }
}

/// Runs `policy` from `start` without backtracking, recording the trace.
pub fn run_episode(start: State, policy: &mut dyn Policy, cfg: &SearchConfig) -> Episode {
    let mut trace = Vec::new();
    let (final_state, outcome) = drive(start, policy, cfg, |s, a| trace.push((s.clone(), *a)));
    Episode {
        trace,
        final_state,
        ret: outcome.discounted_return(cfg.gamma),
        outcome,
    }
}

/// Like [`run_episode`] from `{goal}`, keeping only the outcome.
pub fn rollout(goal: &Sequent, policy: &mut dyn Policy, cfg: &SearchConfig) -> Outcome {
    drive(State::single(goal.clone()), policy, cfg, |_, _| {}).1
}

/// Rollout that also returns the proof when one is found.
pub fn prove_by_rollout(goal: &Sequent, policy: &mut dyn Policy, cfg: &SearchConfig) -> (Outcome, Option<ProofTree>) {
    let mut applied = Vec::new();
    let (_, outcome) = drive(State::single(goal.clone()), policy, cfg, |s, a| {
        applied.push((s.open[a.sequent_index].clone(), a.rule))
    });
    let proof = outcome
        .is_proved()
        .then(|| proofs_from_actions(std::slice::from_ref(goal), &applied).remove(0));
    (outcome, proof)
}

/// Rebuilds proof trees from the rule applications of a successful search.
///
/// Every opened sequent is closed by exactly one recorded application, so
/// applications can be matched to occurrences in any order.
pub fn proofs_from_actions(goals: &[Sequent], applied: &[(Sequent, RuleInstance)]) -> Vec<ProofTree> {
    let mut pending: HashMap<&Sequent, std::collections::VecDeque<RuleInstance>> = HashMap::new();
    for (s, r) in applied {
        pending.entry(s).or_default().push_back(*r);
    }
    fn build(s: &Sequent, pending: &mut HashMap<&Sequent, std::collections::VecDeque<RuleInstance>>) -> ProofTree {
        let rule = pending
            .get_mut(s)
            .and_then(|q| q.pop_front())
            .expect("every open sequent was closed by the search");
        let children = apply_rule(s, &rule)
            .expect("recorded actions apply")
            .iter()
            .map(|p| build(p, pending))
            .collect();
        ProofTree {
            sequent: s.clone(),
            rule,
            children,
        }
    }
    goals.iter().map(|g| build(g, &mut pending)).collect()
}

// ---------------------------------------------------------------------------
// Greedy DFS

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailReason {
    /// The whole search space was explored.
    Exhausted,
    BudgetExceeded,
}

#[derive(Debug, Clone)]
pub enum DfsOutcome {
    Proved { proof: ProofTree, steps: usize },
    Failed { steps: usize, reason: FailReason },
}

impl DfsOutcome {
    pub fn steps(&self) -> usize {
        match self {
            DfsOutcome::Proved { steps, .. } | DfsOutcome::Failed { steps, .. } => *steps,
        }
    }

    pub fn is_proved(&self) -> bool {
        matches!(self, DfsOutcome::Proved { .. })
    }

    pub fn proof(&self) -> Option<&ProofTree> {
        match self {
            DfsOutcome::Proved { proof, .. } => Some(proof),
            DfsOutcome::Failed { .. } => None,
        }
    }
}

struct Frame {
    state: State,
    // Candidates ordered by descending successor value.
    order: Vec<Candidate>,
    next: usize,
}

/// Depth-first search with backtracking. Each state expands only its
/// lowest-valued sequent; that sequent's actions are tried in order of
/// decreasing successor value. `steps` counts expanded states.
pub fn greedy_dfs(goal: &Sequent, model: &dyn SequentValue, cfg: &SearchConfig) -> DfsOutcome {
    greedy_dfs_with_cache(goal, model, cfg, &mut ValueCache::default())
}

pub fn greedy_dfs_with_cache(goal: &Sequent, model: &dyn SequentValue, cfg: &SearchConfig, cache: &mut ValueCache) -> DfsOutcome {
    let clock = Instant::now();
    let mut steps = 0;
    let mut failed: HashSet<State> = HashSet::new();
    let mut path: Vec<(Sequent, RuleInstance)> = Vec::new();
    let mut stack: Vec<Frame> = Vec::new();

    let over_budget =
        |steps: usize| steps >= cfg.step_limit || cfg.time_limit.is_some_and(|t| clock.elapsed() >= t);

    let expand = |state: State, cache: &mut ValueCache| -> Frame {
        cache.fill(model, state.open());
        let mut lowest = 0;
        for (i, p) in state.open.iter().enumerate() {
            if cache.value(p) < cache.value(&state.open[lowest]) {
                lowest = i;
            }
        }
        let cands = candidates(&state, Some(lowest));
        let values = successor_values(&state, &cands, model, cache);
        let mut ranked: Vec<(f64, Candidate)> = values.into_iter().zip(cands).collect();
        // Stable: equal values keep canonical action order.
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
        Frame {
            state,
            order: ranked.into_iter().map(|(_, c)| c).collect(),
            next: 0,
        }
    };

    if over_budget(steps) {
        return DfsOutcome::Failed {
            steps,
            reason: FailReason::BudgetExceeded,
        };
    }
    steps += 1;
    stack.push(expand(State::single(goal.clone()), cache));

    while let Some(top) = stack.last_mut() {
        if top.next == top.order.len() {
            let done = stack.pop().expect("non-empty");
            failed.insert(done.state);
            if !stack.is_empty() {
                path.pop();
            }
            continue;
        }
        let cand = &top.order[top.next];
        top.next += 1;
        let i = cand.action.sequent_index;
        path.push((top.state.open[i].clone(), cand.action.rule));
        let succ = top.state.replace(i, cand.premises.clone());
        if succ.is_empty() {
            let proof = proofs_from_actions(std::slice::from_ref(goal), &path).remove(0);
            return DfsOutcome::Proved { proof, steps };
        }
        if failed.contains(&succ) {
            path.pop();
            continue;
        }
        if over_budget(steps) {
            return DfsOutcome::Failed {
                steps,
                reason: FailReason::BudgetExceeded,
            };
        }
        steps += 1;
        let frame = expand(succ, cache);
        stack.push(frame);
    }
    DfsOutcome::Failed {
        steps,
        reason: FailReason::Exhausted,
    }
}
