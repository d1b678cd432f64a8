//! Approximate policy iteration and benchmarking.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::augment::{build_dataset, library_examples, split_dataset, AugmentConfig};
use crate::calculus::check_proof;
use crate::search::{greedy_dfs, prove_by_rollout, DfsOutcome, LengthHeuristic, PolicyKind, SearchConfig, SequentValue};
use crate::syntax::Sequent;
use crate::valuemodel::{train, ModelKind, TrainConfig, TrainError, ValueModel};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("the library is empty")]
    EmptyLibrary,
    #[error("iteration {iteration}: {source}")]
    Train { iteration: usize, source: TrainError },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Fraction of `library` proven by rollouts of `policy`, each proof checked.
pub fn solve_rate(library: &[Sequent], policy: PolicyKind<'_>, cfg: &SearchConfig) -> (f64, Vec<bool>) {
    let solved: Vec<bool> = library
        .par_iter()
        .map(|goal| {
            let (_, proof) = prove_by_rollout(goal, policy.instantiate().as_mut(), cfg);
            match proof {
                Some(p) => match check_proof(&p, goal) {
                    Ok(()) => true,
                    Err(e) => {
                        log::error!("rejected certificate for {goal}: {e}");
                        false
                    }
                },
                None => false,
            }
        })
        .collect();
    let n = solved.iter().filter(|&&s| s).count();
    let rate = if library.is_empty() { 0.0 } else { n as f64 / library.len() as f64 };
    (rate, solved)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiConfig {
    pub iterations: usize,
    pub kind: ModelKind,
    /// Caps, discount and step limit of the labelling rollouts.
    pub augment: AugmentConfig,
    pub train: TrainConfig,
    /// Step limit of the rollouts that measure solve rates.
    pub eval_step_limit: usize,
    /// Without augmentation, each iteration trains on the library theorems
    /// the current policy proves, labelled with their returns.
    pub augmentation: bool,
    /// Seed of the per-iteration train/validation/test split.
    pub split_seed: u64,
}

impl Default for ApiConfig {
    fn default() -> Self {
        ApiConfig {
            iterations: 2,
            kind: ModelKind::GnnTm,
            augment: AugmentConfig::default(),
            train: TrainConfig::default(),
            eval_step_limit: 10_000,
            augmentation: true,
            split_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiIteration {
    /// `i + 1` for the model trained on data from policy `pi_i`.
    pub iteration: usize,
    pub dataset_size: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    pub test_mse: f64,
    /// Solve rate of the improved policy `pi_{i+1}`.
    pub solve_rate: f64,
}

#[derive(Debug, Clone)]
pub struct ApiResult {
    pub initial_solve_rate: f64,
    pub iterations: Vec<ApiIteration>,
    pub models: Vec<ValueModel>,
}

impl ApiResult {
    /// Solve rates of `pi_0, pi_1, ...`.
    pub fn solve_rates(&self) -> Vec<f64> {
        std::iter::once(self.initial_solve_rate)
            .chain(self.iterations.iter().map(|i| i.solve_rate))
            .collect()
    }
}

/// Alternates value regression and greedy improvement, starting from the
/// naive greedy policy. Each iteration trains from a fresh initialisation.
pub fn api_iterate(library: &[Sequent], cfg: &ApiConfig) -> Result<ApiResult, PipelineError> {
    if library.is_empty() {
        return Err(PipelineError::EmptyLibrary);
    }
    let eval = SearchConfig {
        step_limit: cfg.eval_step_limit,
        gamma: cfg.augment.search.gamma,
        ..SearchConfig::default()
    };
    let (initial_solve_rate, _) = solve_rate(library, PolicyKind::NaiveGreedy, &eval);
    log::info!("pi_0 solves {:.1}% of the library", 100.0 * initial_solve_rate);
    let mut models: Vec<ValueModel> = Vec::new();
    let mut iterations = Vec::new();
    for i in 0..cfg.iterations {
        let policy = match models.last() {
            None => PolicyKind::NaiveGreedy,
            Some(m) => PolicyKind::Value(m),
        };
        let data = if cfg.augmentation {
            build_dataset(library, policy, &cfg.augment)
        } else {
            library_examples(library, policy, &cfg.augment.search)
        };
        let split = split_dataset(&data, cfg.split_seed.wrapping_add(i as u64));
        let tc = TrainConfig {
            seed: cfg.train.seed.wrapping_add(i as u64),
            ..cfg.train.clone()
        };
        let report = train(cfg.kind, &split.train, &split.val, &split.test, &tc).map_err(|source| PipelineError::Train {
            iteration: i + 1,
            source,
        })?;
        let (rate, _) = solve_rate(library, PolicyKind::Value(&report.model), &eval);
        log::info!(
            "iteration {}: {} examples, test mse {:.5}, pi_{} solves {:.1}%",
            i + 1,
            data.len(),
            report.test_mse,
            i + 1,
            100.0 * rate
        );
        iterations.push(ApiIteration {
            iteration: i + 1,
            dataset_size: data.len(),
            train_mse: report.train_mse,
            val_mse: report.val_mse,
            test_mse: report.test_mse,
            solve_rate: rate,
        });
        models.push(report.model);
    }
    Ok(ApiResult {
        initial_solve_rate,
        iterations,
        models,
    })
}

/// CSV `iteration,dataset_size,train_mse,val_mse,test_mse,solve_rate`; row 0
/// is the naive greedy policy and has no dataset.
pub fn write_api_log<W: Write>(w: W, r: &ApiResult) -> Result<(), PipelineError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["iteration", "dataset_size", "train_mse", "val_mse", "test_mse", "solve_rate"])?;
    out.write_record(["0", "0", "", "", "", &r.initial_solve_rate.to_string()])?;
    for it in &r.iterations {
        out.write_record([
            it.iteration.to_string(),
            it.dataset_size.to_string(),
            it.train_mse.to_string(),
            it.val_mse.to_string(),
            it.test_mse.to_string(),
            it.solve_rate.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Benchmarking

/// A per-problem proving budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    /// Wall-clock seconds.
    Seconds(f64),
    /// Expanded states; deterministic.
    Steps(usize),
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Seconds(s) => write!(f, "{s}s"),
            Budget::Steps(n) => write!(f, "{n}steps"),
        }
    }
}

impl FromStr for Budget {
    type Err = String;

    /// `"3"` or `"3s"` is seconds; `"500steps"` is a step budget.
    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(n) = s.strip_suffix("steps") {
            return n.parse().map(Budget::Steps).map_err(|_| format!("bad step budget `{s}`"));
        }
        let secs = s.strip_suffix('s').unwrap_or(s);
        match secs.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(Budget::Seconds(v)),
            _ => Err(format!("bad time limit `{s}`")),
        }
    }
}

/// A named greedy-DFS prover; `None` uses the length heuristic, which makes
/// the search follow the naive greedy policy.
pub struct Prover<'a> {
    pub id: String,
    pub model: Option<&'a ValueModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub problem_id: usize,
    pub prover: String,
    pub limit: Budget,
    pub solved: bool,
    pub steps: usize,
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub prover: String,
    pub limit: Budget,
    pub solve_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    /// Ordered by problem, then prover, then limit.
    pub records: Vec<BenchRecord>,
    pub aggregates: Vec<Aggregate>,
    /// Per prover: step counts of problems solved within the largest limit,
    /// ascending.
    pub cactus: Vec<(String, Vec<usize>)>,
}

struct Run {
    solved: bool,
    steps: usize,
    elapsed: Duration,
}

fn run_prover(goal: &Sequent, model: &dyn SequentValue, cfg: &SearchConfig) -> Run {
    let clock = Instant::now();
    let out = greedy_dfs(goal, model, cfg);
    let elapsed = clock.elapsed();
    let solved = match &out {
        DfsOutcome::Proved { proof, .. } => match check_proof(proof, goal) {
            Ok(()) => true,
            Err(e) => {
                log::error!("rejected certificate for {goal}: {e}");
                false
            }
        },
        DfsOutcome::Failed { .. } => false,
    };
    Run {
        solved,
        steps: out.steps(),
        elapsed,
    }
}

/// Runs every prover on every problem with greedy DFS.
///
/// Each (problem, prover) pair is searched once under the most generous of
/// `limits`; the verdict under a smaller limit is whether that run finished
/// within it. With step budgets this equals a separate run per limit, since
/// the search is deterministic.
pub fn benchmark(problems: &[Sequent], provers: &[Prover<'_>], limits: &[Budget], gamma: f64) -> BenchResult {
    let max_steps = limits
        .iter()
        .filter_map(|l| match l {
            Budget::Steps(n) => Some(*n),
            Budget::Seconds(_) => None,
        })
        .max();
    let max_secs = limits
        .iter()
        .filter_map(|l| match l {
            Budget::Seconds(s) => Some(*s),
            Budget::Steps(_) => None,
        })
        .fold(None, |a: Option<f64>, s| Some(a.map_or(s, |a| a.max(s))));
    let cfg = SearchConfig {
        gamma,
        step_limit: match (max_steps, max_secs) {
            (Some(n), None) => n,
            _ => usize::MAX,
        },
        time_limit: max_secs.map(Duration::from_secs_f64),
        backtracking: true,
    };
    let heuristic = LengthHeuristic { gamma };

    let runs: Vec<Vec<Run>> = problems
        .par_iter()
        .map(|goal| {
            provers
                .iter()
                .map(|p| {
                    let model: &dyn SequentValue = match p.model {
                        Some(m) => m,
                        None => &heuristic,
                    };
                    run_prover(goal, model, &cfg)
                })
                .collect()
        })
        .collect();

    let mut records = Vec::new();
    for (pid, per_prover) in runs.iter().enumerate() {
        for (prover, run) in provers.iter().zip(per_prover) {
            for limit in limits {
                // A search stopped by a step budget reports the budget itself.
                let (within, steps) = match limit {
                    Budget::Steps(n) => (run.steps <= *n, run.steps.min(*n)),
                    Budget::Seconds(s) => (run.elapsed.as_secs_f64() <= *s, run.steps),
                };
                records.push(BenchRecord {
                    problem_id: pid,
                    prover: prover.id.clone(),
                    limit: *limit,
                    solved: run.solved && within,
                    steps,
                    millis: run.elapsed.as_secs_f64() * 1000.0,
                });
            }
        }
    }

    let mut aggregates = Vec::new();
    for prover in provers {
        for limit in limits {
            let solved = records
                .iter()
                .filter(|r| r.prover == prover.id && r.limit == *limit && r.solved)
                .count();
            aggregates.push(Aggregate {
                prover: prover.id.clone(),
                limit: *limit,
                solve_rate: if problems.is_empty() { 0.0 } else { solved as f64 / problems.len() as f64 },
            });
        }
    }

    let cactus = provers
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let mut steps: Vec<usize> = runs.iter().filter(|r| r[k].solved).map(|r| r[k].steps).collect();
            steps.sort_unstable();
            (p.id.clone(), steps)
        })
        .collect();

    BenchResult {
        records,
        aggregates,
        cactus,
    }
}

impl BenchResult {
    /// Per problem, the step counts of two provers, for problems solved under
    /// the given limit by at least one of them. A prover that failed is
    /// charged the full step count it used.
    pub fn paired_steps(&self, a: &str, b: &str, limit: Budget) -> Vec<(usize, usize, usize)> {
        let pick = |id: &str, pid: usize| {
            self.records
                .iter()
                .find(|r| r.prover == id && r.problem_id == pid && r.limit == limit)
        };
        let n = self.records.iter().map(|r| r.problem_id + 1).max().unwrap_or(0);
        (0..n)
            .filter_map(|pid| {
                let (ra, rb) = (pick(a, pid)?, pick(b, pid)?);
                (ra.solved || rb.solved).then_some((pid, ra.steps, rb.steps))
            })
            .collect()
    }

    /// Writes `per_problem.csv`, `aggregate.csv` and `cactus.csv` to `dir`.
    /// Without `timings` the `millis` column is left empty, so that runs
    /// under step limits produce byte-identical files.
    pub fn write_csvs(&self, dir: &Path, timings: bool) -> Result<(), PipelineError> {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("per_problem.csv"))?;
        w.write_record(["problem_id", "prover", "time_limit", "solved", "steps", "millis"])?;
        for r in &self.records {
            w.write_record([
                r.problem_id.to_string(),
                r.prover.clone(),
                r.limit.to_string(),
                u8::from(r.solved).to_string(),
                r.steps.to_string(),
                if timings { format!("{:.3}", r.millis) } else { String::new() },
            ])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("aggregate.csv"))?;
        w.write_record(["prover", "time_limit", "solve_rate"])?;
        for a in &self.aggregates {
            w.write_record([a.prover.clone(), a.limit.to_string(), a.solve_rate.to_string()])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("cactus.csv"))?;
        w.write_record(["prover", "rank", "steps"])?;
        for (id, steps) in &self.cactus {
            for (rank, s) in steps.iter().enumerate() {
                w.write_record([id.clone(), (rank + 1).to_string(), s.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
