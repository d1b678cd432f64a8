//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use common::lj_oracle::LjOracle;
use iplrl::augment::{build_dataset, split_dataset, AugmentConfig};
use iplrl::calculus::{
    apply_rule, check_proof, decide, enumerate_actions, is_one_step_provable, weight_multiset, Decision,
};
use iplrl::generator::{build_library, format_library, LibraryConfig};
use iplrl::graphenc::{to_tm_graph, to_vm_graph, GraphFormat};
use iplrl::pipeline::{api_iterate, benchmark, write_api_log, ApiConfig, ApiResult, Budget, Prover};
use iplrl::search::{
    greedy_dfs, rollout, run_episode, LengthHeuristic, NaiveGreedy, SearchConfig, SequentValue, State, ValuePolicy,
};
use iplrl::syntax::{parse_sequent, Formula, Kind, Sequent};
use iplrl::valuemodel::{
    constant_baseline_mse, gradient_check, save_model, train, write_dataset, Example, GnnConfig, GnnModel, ModelKind,
    TrainConfig, ValueModel,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }
}

fn report(id: usize, name: &str, clock: Instant, v: &Verdict) {
    let status = if v.pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "{status} criterion {id} ({name}, {:.1}s): {}",
        clock.elapsed().as_secs_f64(),
        v.detail
    );
    let _ = out.flush();
}

// ---------------------------------------------------------------------------
// Helpers

fn dm_less(a: &[u64], b: &[u64]) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(|x, y| y.cmp(x));
    b.sort_unstable_by(|x, y| y.cmp(x));
    a < b
}

fn rename_random(s: &Sequent, rng: &mut ChaCha8Rng) -> Sequent {
    let mut targets: Vec<u32> = (1..=60).collect();
    targets.shuffle(rng);
    let map: BTreeMap<u32, u32> = s.variables().into_iter().zip(targets).collect();
    s.rename(&map).unwrap()
}

fn connectives(f: &Formula) -> usize {
    match f.kind() {
        Kind::Var(_) => 0,
        Kind::Bottom => 1,
        Kind::And(a, b) | Kind::Or(a, b) | Kind::Imp(a, b) => 1 + connectives(a) + connectives(b),
    }
}

fn search_cfg(step_limit: usize) -> SearchConfig {
    SearchConfig {
        step_limit,
        ..SearchConfig::default()
    }
}

fn small_gnn(seed: u64, format: GraphFormat) -> ValueModel {
    let cfg = GnnConfig {
        hidden: 8,
        steps: 3,
        format,
    };
    ValueModel::Gnn(GnnModel::new(cfg, &mut ChaCha8Rng::seed_from_u64(seed)))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

// ---------------------------------------------------------------------------
// 1. Calculus

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut applications, mut violations) = (0usize, 0usize);
    for _ in 0..100_000 {
        let s = common::random_sequent(&mut rng, 10, 3);
        let w = weight_multiset(&s);
        for r in enumerate_actions(&s) {
            for p in apply_rule(&s, &r).unwrap() {
                applications += 1;
                if !dm_less(&weight_multiset(&p), &w) {
                    violations += 1;
                }
            }
        }
    }

    let (mut formulas, mut disagreements, mut inconclusive) = (0usize, 0usize, 0usize);
    common::for_each_formula(12, 2, |f| {
        formulas += 1;
        match decide(&Sequent::goal(f.clone()), usize::MAX) {
            Decision::BudgetExceeded => inconclusive += 1,
            d => {
                if d.is_provable() != LjOracle::provable(&[], f) {
                    disagreements += 1;
                }
            }
        }
    });

    let known = [
        ("|- P1 -> P1", true),
        ("|- P1 | ~P1", false),
        ("|- ~~(P1 | ~P1)", true),
        ("|- ((P1 -> P2) -> P1) -> P1", false),
    ];
    let known_ok = known
        .iter()
        .all(|(t, want)| decide(&parse_sequent(t).unwrap(), usize::MAX).is_provable() == *want);

    Verdict::new(
        violations == 0 && disagreements == 0 && inconclusive == 0 && known_ok && applications >= 100_000,
        format!(
            "{violations} weight violations in {applications} rule applications over 100000 sequents; \
             {disagreements} oracle disagreements over {formulas} formulas; known cases {}",
            if known_ok { "ok" } else { "WRONG" }
        ),
    )
}

// ---------------------------------------------------------------------------
// 2. Certificates

fn criterion_2() -> Verdict {
    let mut corpus: Vec<Sequent> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    corpus.extend((0..3000).map(|_| common::random_sequent(&mut rng, 12, 3)));
    corpus.extend(build_library(&LibraryConfig::desk(200, 102)).unwrap().theorems);
    corpus.extend(build_library(&LibraryConfig::desk_exam(50, 103)).unwrap().theorems);
    let gnn = small_gnn(102, GraphFormat::Tm);
    let heuristic = LengthHeuristic::default();
    let cfg = search_cfg(2_000);
    let (mut emitted, mut rejected) = ([0usize; 3], 0usize);
    for goal in &corpus {
        if let Decision::Provable(p) = decide(goal, 1_000_000) {
            emitted[0] += 1;
            rejected += usize::from(check_proof(&p, goal).is_err());
        }
        for ep in [
            run_episode(State::single(goal.clone()), &mut NaiveGreedy, &cfg),
            run_episode(State::single(goal.clone()), &mut ValuePolicy::new(&gnn), &cfg),
        ] {
            if let Some(proofs) = ep.proofs() {
                emitted[1] += 1;
                rejected += usize::from(check_proof(&proofs[0], goal).is_err());
            }
        }
        for model in [&heuristic as &dyn SequentValue, &gnn] {
            if let Some(p) = greedy_dfs(goal, model, &cfg).proof() {
                emitted[2] += 1;
                rejected += usize::from(check_proof(p, goal).is_err());
            }
        }
    }
    Verdict::new(
        rejected == 0 && emitted.iter().all(|&n| n > 0),
        format!(
            "{rejected} rejected of {} certificates (decide {}, episodes {}, greedy DFS {}) on {} goals",
            emitted.iter().sum::<usize>(),
            emitted[0],
            emitted[1],
            emitted[2],
            corpus.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// 3. Graph encodings

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let (mut renaming_failures, mut size_failures, mut count_failures) = (0, 0, 0);
    for _ in 0..10_000 {
        let s = common::random_sequent(&mut rng, 12, 4);
        let r = rename_random(&s, &mut rng);
        let (vm, tm) = (to_vm_graph(&s), to_tm_graph(&s));
        if vm != to_vm_graph(&r) || tm != to_tm_graph(&r) {
            renaming_failures += 1;
        }
        if tm.vertex_count() > vm.vertex_count() {
            size_failures += 1;
        }
        let conns: usize = s.antecedents().iter().chain([s.consequent()]).map(connectives).sum();
        if vm.vertex_count() != s.variables().len() + conns + 1 {
            count_failures += 1;
        }
    }
    // Repeated non-atomic subterms must shrink the term-merged graph.
    let mut strict_failures = 0;
    let mut family = 0;
    for _ in 0..1000 {
        let (na, nb) = (rng.random_range(3..10), rng.random_range(1..6));
        let a = common::random_formula(&mut rng, na, 3);
        let b = common::random_formula(&mut rng, nb, 3);
        if a.length() < 2 {
            continue;
        }
        for s in [
            Sequent::new(vec![a.clone()], a.clone()),
            Sequent::new(vec![a.clone(), b.clone()], Formula::and(a.clone(), b.clone())),
            Sequent::goal(Formula::imp(a.clone(), Formula::or(b.clone(), a.clone()))),
        ] {
            family += 1;
            if to_tm_graph(&s).vertex_count() >= to_vm_graph(&s).vertex_count() {
                strict_failures += 1;
            }
        }
    }
    Verdict::new(
        renaming_failures + size_failures + count_failures + strict_failures == 0,
        format!(
            "renaming mismatches {renaming_failures}/10000, |TM|>|VM| {size_failures}, \
             VM count formula misses {count_failures}, non-strict repeated-subterm cases {strict_failures}/{family}"
        ),
    )
}

// ---------------------------------------------------------------------------
// 4. GNN numerics

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let cfg = GnnConfig {
            hidden: [2, 4, 8][i % 3],
            steps: 1 + (i / 3) % 3,
            format: if i % 2 == 0 { GraphFormat::Tm } else { GraphFormat::Vm },
        };
        let model = ValueModel::Gnn(GnnModel::new(cfg, &mut rng));
        let s = common::random_sequent(&mut rng, 8, 3);
        let target = rng.random_range(0.0..1.0);
        worst = worst.max(gradient_check(&model, &s, target, 1e-4).max_relative_error);
    }
    let vm = small_gnn(104, GraphFormat::Vm);
    let tm = ValueModel::Gnn(GnnModel::new(GnnConfig::default(), &mut rng));
    let mut mismatches = 0;
    for _ in 0..2000 {
        let s = common::random_sequent(&mut rng, 12, 4);
        let r = rename_random(&s, &mut rng);
        for m in [&vm, &tm] {
            if m.evaluate(&s).to_bits() != m.evaluate(&r).to_bits() {
                mismatches += 1;
            }
        }
    }
    Verdict::new(
        worst <= 1e-5 && mismatches == 0,
        format!("max relative gradient error {worst:.2e} over 100 instances; {mismatches} renaming mismatches in 4000 evaluations"),
    )
}

// ---------------------------------------------------------------------------
// 5. Prediction task

const MIN_EXAMPLES: usize = 50_000;
const CHUNK: usize = 50;

/// Augmented dataset from a seeded library, taking whole 50-theorem chunks
/// until it holds at least `MIN_EXAMPLES` examples.
fn prediction_dataset(seed: u64) -> (Vec<Example>, usize) {
    let lib = build_library(&LibraryConfig::desk(2000, seed)).unwrap().theorems;
    let mut data = Vec::new();
    let mut used = 0;
    while data.len() < MIN_EXAMPLES && used < lib.len() {
        let end = (used + CHUNK).min(lib.len());
        let mut part = build_dataset(&lib[used..end], iplrl::search::PolicyKind::NaiveGreedy, &AugmentConfig::default());
        for e in &mut part {
            e.origin += used;
        }
        data.extend(part);
        used = end;
    }
    (data, used)
}

fn criterion_5(keep: &mut Option<Vec<Example>>) -> Verdict {
    let clock = Instant::now();
    let mut good = 0;
    let mut lines = Vec::new();
    for seed in SEEDS {
        let (data, theorems) = prediction_dataset(seed);
        let split = split_dataset(&data, seed);
        let origins = data.iter().map(|e| e.origin).collect::<HashSet<_>>().len();
        let base = constant_baseline_mse(&split.train, &split.test);
        let cfg = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        let mse: Vec<f64> = [ModelKind::Bow, ModelKind::GnnVm, ModelKind::GnnTm]
            .iter()
            .map(|&k| train(k, &split.train, &split.val, &split.test, &cfg).unwrap().test_mse)
            .collect();
        let (bow, vm, tm) = (mse[0], mse[1], mse[2]);
        let ordered = tm < vm && vm < bow;
        let beat = bow < base && vm < base && tm < base;
        let sized = data.len() >= MIN_EXAMPLES && origins >= 50;
        if ordered && beat && sized {
            good += 1;
        }
        lines.push(format!(
            "seed {seed}: {} examples from {origins} origins ({theorems} theorems), test mse tm {tm:.4} vm {vm:.4} bow {bow:.4} const {base:.4}{}",
            data.len(),
            if ordered && beat && sized { "" } else { " [miss]" }
        ));
        if seed == SEEDS[0] {
            *keep = Some(data);
        }
    }
    let minutes = clock.elapsed().as_secs_f64() / 60.0;
    Verdict::new(
        good >= 4 && minutes <= 60.0,
        format!("{good}/5 seeds ordered tm < vm < bow < const in {minutes:.1} min; {}", lines.join("; ")),
    )
}

// ---------------------------------------------------------------------------
// 6. Augmentation

fn augmentation_faults(data: &[Example], cfg: &AugmentConfig, relabel: &dyn Fn(&Sequent) -> f64) -> (usize, usize, usize) {
    let mut by_origin: BTreeMap<usize, Vec<&Example>> = BTreeMap::new();
    for e in data {
        by_origin.entry(e.origin).or_default().push(e);
    }
    let (mut caps, mut dups, mut labels) = (0, 0, 0);
    for rows in by_origin.values() {
        let eq1 = rows.iter().filter(|e| e.one_step).count();
        if eq1 > cfg.n_eq1 || rows.len() - eq1 > cfg.n_ge2 {
            caps += 1;
        }
        let distinct: HashSet<&Sequent> = rows.iter().map(|e| &e.sequent).collect();
        dups += rows.len() - distinct.len();
    }
    for e in data {
        if e.one_step != is_one_step_provable(&e.sequent) || e.ret.to_bits() != relabel(&e.sequent).to_bits() {
            labels += 1;
        }
    }
    (caps, dups, labels)
}

fn criterion_6(naive_data: &[Example], model: &ValueModel) -> Verdict {
    let cfg = AugmentConfig::default();
    assert_eq!((cfg.n_ge2, cfg.n_eq1, cfg.search.gamma), (1000, 100, 0.95));
    let naive = |s: &Sequent| rollout(s, &mut NaiveGreedy, &cfg.search).discounted_return(0.95);
    let (c1, d1, l1) = augmentation_faults(naive_data, &cfg, &naive);

    let lib = build_library(&LibraryConfig::desk(10, 106)).unwrap().theorems;
    let valued = build_dataset(&lib, iplrl::search::PolicyKind::Value(model), &cfg);
    let relabel = |s: &Sequent| rollout(s, &mut ValuePolicy::new(model), &cfg.search).discounted_return(0.95);
    let (c2, d2, l2) = augmentation_faults(&valued, &cfg, &relabel);

    Verdict::new(
        c1 + d1 + l1 + c2 + d2 + l2 == 0 && !naive_data.is_empty() && !valued.is_empty(),
        format!(
            "naive-greedy dataset ({} examples): {c1} cap violations, {d1} duplicates, {l1} label mismatches; \
             trained-policy dataset ({} examples): {c2} cap violations, {d2} duplicates, {l2} label mismatches",
            naive_data.len(),
            valued.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// 7. Policy iteration

fn api_config(seed: u64, augmentation: bool, iterations: usize) -> ApiConfig {
    ApiConfig {
        iterations,
        kind: ModelKind::GnnTm,
        augment: AugmentConfig::default(),
        train: TrainConfig {
            seed,
            ..TrainConfig::default()
        },
        eval_step_limit: 10_000,
        augmentation,
        split_seed: seed,
    }
}

fn criterion_7(keep: &mut Option<ApiResult>) -> Verdict {
    let (mut improving, mut ablation) = (0, 0);
    let mut lines = Vec::new();
    for seed in SEEDS {
        let lib = build_library(&LibraryConfig::desk(50, seed)).unwrap().theorems;
        let aug = api_iterate(&lib, &api_config(seed, true, 2)).unwrap();
        let raw = api_iterate(&lib, &api_config(seed, false, 1)).unwrap();
        let r = aug.solve_rates();
        let q = raw.solve_rates();
        let ok = r[1] >= r[0] && r[2] >= r[1] - 0.05;
        let smaller = q[1] - q[0] < r[1] - r[0];
        improving += usize::from(ok);
        ablation += usize::from(smaller);
        lines.push(format!(
            "seed {seed}: pi0 {:.2} pi1 {:.2} pi2 {:.2}, no-aug pi1 {:.2}",
            r[0], r[1], r[2], q[1]
        ));
        if seed == SEEDS[0] {
            *keep = Some(aug);
        }
    }
    Verdict::new(
        improving >= 4 && ablation >= 4,
        format!(
            "{improving}/5 seeds with pi1 >= pi0 and pi2 >= pi1 - 5pp; {ablation}/5 seeds with a smaller no-augmentation gain; {}",
            lines.join("; ")
        ),
    )
}

// ---------------------------------------------------------------------------
// 8. Proving

const EXAM_STEPS: usize = 1_000;

fn criterion_8(model: &ValueModel) -> Verdict {
    let exam = build_library(&LibraryConfig::desk_exam(100, 108)).unwrap().theorems;
    let provers = [
        Prover {
            id: "pi0".into(),
            model: None,
        },
        Prover {
            id: "trained".into(),
            model: Some(model),
        },
    ];
    let limit = Budget::Steps(EXAM_STEPS);
    let r = benchmark(&exam, &provers, &[limit], 0.95);
    let solved = |id: &str| r.records.iter().filter(|x| x.prover == id && x.solved).count();
    let (base, trained) = (solved("pi0"), solved("trained"));
    // Unsolved runs are charged the full budget.
    let charged = |id: &str, pid: usize| {
        let rec = r.records.iter().find(|x| x.prover == id && x.problem_id == pid).unwrap();
        if rec.solved { rec.steps.max(1) } else { EXAM_STEPS }
    };
    let pairs = r.paired_steps("trained", "pi0", limit);
    let ratios: Vec<f64> = pairs
        .iter()
        .map(|&(pid, _, _)| charged("trained", pid) as f64 / charged("pi0", pid) as f64)
        .collect();
    let med = if ratios.is_empty() { f64::INFINITY } else { median(ratios) };
    Verdict::new(
        trained >= base && med <= 1.0,
        format!(
            "{} exam problems at {EXAM_STEPS} steps: trained solves {trained}, pi0 solves {base}; \
             median step ratio {med:.3} over {} problems",
            exam.len(),
            pairs.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// 9. Reproducibility

fn ci_pipeline(dir: &Path) {
    let lib_cfg = LibraryConfig::desk(20, 109);
    let lib = build_library(&lib_cfg).unwrap();
    std::fs::write(dir.join("library.txt"), format_library(&lib, &lib_cfg)).unwrap();
    let exam_cfg = LibraryConfig::desk_exam(15, 110);
    let exam = build_library(&exam_cfg).unwrap();
    std::fs::write(dir.join("exam.txt"), format_library(&exam, &exam_cfg)).unwrap();

    let cfg = ApiConfig {
        iterations: 2,
        augment: AugmentConfig {
            n_ge2: 200,
            n_eq1: 20,
            ..AugmentConfig::default()
        },
        train: TrainConfig {
            epochs: 3,
            seed: 109,
            ..TrainConfig::default()
        },
        split_seed: 109,
        ..ApiConfig::default()
    };
    let data = build_dataset(&lib.theorems, iplrl::search::PolicyKind::NaiveGreedy, &cfg.augment);
    write_dataset(std::fs::File::create(dir.join("dataset.tsv")).unwrap(), &data).unwrap();
    let api = api_iterate(&lib.theorems, &cfg).unwrap();
    write_api_log(std::fs::File::create(dir.join("api_log.csv")).unwrap(), &api).unwrap();
    for (i, m) in api.models.iter().enumerate() {
        save_model(m, &dir.join(format!("model_{}.txt", i + 1))).unwrap();
    }
    let provers = [
        Prover {
            id: "pi0".into(),
            model: None,
        },
        Prover {
            id: "trained".into(),
            model: api.models.last(),
        },
    ];
    let limits = [Budget::Steps(50), Budget::Steps(200), Budget::Steps(1000)];
    benchmark(&exam.theorems, &provers, &limits, 0.95)
        .write_csvs(&dir.join("bench"), false)
        .unwrap();
}

fn file_listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let name = path.strip_prefix(dir).unwrap().display().to_string();
                out.push((name, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn criterion_9() -> Verdict {
    let runs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for r in &runs {
        ci_pipeline(r.path());
    }
    let (a, b) = (file_listing(runs[0].path()), file_listing(runs[1].path()));
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    Verdict::new(
        a.len() == b.len() && differing.is_empty() && names.iter().any(|n| n.ends_with(".csv")),
        format!("{} files compared ({}); differing: {:?}", a.len(), names.join(", "), differing),
    )
}

fn main() {
    let mut all = true;
    let mut record = |id: usize, name: &str, clock: Instant, v: Verdict| {
        report(id, name, clock, &v);
        all &= v.pass;
    };

    let t = Instant::now();
    record(1, "calculus soundness and termination", t, criterion_1());
    let t = Instant::now();
    record(2, "certificate soundness", t, criterion_2());
    let t = Instant::now();
    record(3, "graph encodings", t, criterion_3());
    let t = Instant::now();
    record(4, "GNN numerics", t, criterion_4());
    let t = Instant::now();
    let mut prediction_data = None;
    record(5, "prediction task", t, criterion_5(&mut prediction_data));
    let t = Instant::now();
    let mut api = None;
    record(7, "policy iteration", t, criterion_7(&mut api));
    let api = api.expect("seed 0 ran");
    let model = api.models.last().expect("two iterations");
    let t = Instant::now();
    record(6, "augmentation", t, criterion_6(prediction_data.as_deref().unwrap_or(&[]), model));
    let t = Instant::now();
    record(8, "proving", t, criterion_8(model));
    let t = Instant::now();
    record(9, "reproducibility", t, criterion_9());

    if !all {
        std::process::exit(1);
    }
}
