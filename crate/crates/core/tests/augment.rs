use std::collections::{BTreeMap, BTreeSet, HashSet};

use iplrl::augment::{augment_from_theorem, build_dataset, library_examples, split_dataset, AugmentConfig};
use iplrl::calculus::is_one_step_provable;
use iplrl::generator::{build_library, LibraryConfig};
use iplrl::graphenc::GraphFormat;
use iplrl::search::{discount, rollout, PolicyKind, SearchConfig, ValuePolicy};
use iplrl::syntax::Sequent;
use iplrl::valuemodel::{read_dataset, write_dataset, Example, GnnConfig, GnnModel, ValueModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn library(count: usize, seed: u64) -> Vec<Sequent> {
    build_library(&LibraryConfig::desk(count, seed)).unwrap().theorems
}

fn by_origin(data: &[Example]) -> BTreeMap<usize, Vec<&Example>> {
    let mut m: BTreeMap<usize, Vec<&Example>> = BTreeMap::new();
    for e in data {
        m.entry(e.origin).or_default().push(e);
    }
    m
}

fn check_invariants(data: &[Example], cfg: &AugmentConfig, relabel: impl Fn(&Sequent) -> f64) {
    for (origin, rows) in by_origin(data) {
        let eq1 = rows.iter().filter(|e| e.one_step).count();
        assert!(eq1 <= cfg.n_eq1, "origin {origin}: {eq1} one-step rows");
        assert!(rows.len() - eq1 <= cfg.n_ge2, "origin {origin}: {} other rows", rows.len() - eq1);
        let distinct: HashSet<&Sequent> = rows.iter().map(|e| &e.sequent).collect();
        assert_eq!(distinct.len(), rows.len(), "origin {origin} has duplicates");
        assert!(rows.windows(2).all(|w| w[0].depth <= w[1].depth), "origin {origin} not in BFS order");
        assert_eq!(rows[0].depth, 0);
        for e in rows {
            assert_eq!(e.one_step, is_one_step_provable(&e.sequent));
            assert_eq!(e.ret.to_bits(), relabel(&e.sequent).to_bits(), "{}", e.sequent);
        }
    }
}

#[test]
fn naive_greedy_dataset_invariants() {
    let lib = library(30, 5);
    let cfg = AugmentConfig::default();
    let data = build_dataset(&lib, PolicyKind::NaiveGreedy, &cfg);
    assert!(!data.is_empty());
    check_invariants(&data, &cfg, |s| {
        let out = rollout(s, &mut iplrl::search::NaiveGreedy, &cfg.search);
        out.discounted_return(0.95)
    });
    for e in &data {
        let n = (e.ret.ln() / 0.95f64.ln()).round() as usize;
        assert!(e.ret == 0.0 || e.ret.to_bits() == discount(0.95, n).to_bits());
    }
}

#[test]
fn tight_caps_are_respected() {
    let lib = library(20, 6);
    for (n_ge2, n_eq1) in [(1, 0), (5, 2), (40, 3), (0, 10)] {
        let cfg = AugmentConfig {
            n_ge2,
            n_eq1,
            ..AugmentConfig::default()
        };
        let data = build_dataset(&lib, PolicyKind::NaiveGreedy, &cfg);
        check_invariants(&data, &cfg, |s| rollout(s, &mut iplrl::search::NaiveGreedy, &cfg.search).discounted_return(0.95));
        if n_ge2 == 0 {
            assert!(data.is_empty());
        }
    }
}

#[test]
fn value_policy_labels_are_recomputable() {
    let lib = library(6, 7);
    let model = ValueModel::Gnn(GnnModel::new(
        GnnConfig {
            hidden: 8,
            steps: 2,
            format: GraphFormat::Tm,
        },
        &mut ChaCha8Rng::seed_from_u64(7),
    ));
    let cfg = AugmentConfig {
        n_ge2: 60,
        n_eq1: 10,
        search: SearchConfig {
            step_limit: 200,
            ..SearchConfig::default()
        },
    };
    let data = build_dataset(&lib, PolicyKind::Value(&model), &cfg);
    check_invariants(&data, &cfg, |s| rollout(s, &mut ValuePolicy::new(&model), &cfg.search).discounted_return(0.95));
}

#[test]
fn unprovable_goals_are_skipped_and_library_mode_labels() {
    let goals: Vec<Sequent> = ["|- P1 | ~P1", "|- P1 -> P1", "|- ((P1 -> P2) -> P1) -> P1"]
        .iter()
        .map(|t| t.parse().unwrap())
        .collect();
    let data = build_dataset(&goals, PolicyKind::NaiveGreedy, &AugmentConfig::default());
    assert!(data.iter().all(|e| e.origin == 1));
    let raw = library_examples(&goals, PolicyKind::NaiveGreedy, &SearchConfig::default());
    assert_eq!(raw.len(), 1);
    assert_eq!(raw[0].ret, discount(0.95, 2));
    assert!(augment_from_theorem(&goals[0], PolicyKind::NaiveGreedy, &AugmentConfig::default()).is_empty());
}

#[test]
fn splits_partition_origins() {
    let lib = library(30, 8);
    let data = build_dataset(&lib, PolicyKind::NaiveGreedy, &AugmentConfig::default());
    let s = split_dataset(&data, 8);
    let origins = |d: &[Example]| d.iter().map(|e| e.origin).collect::<BTreeSet<_>>();
    let (a, b, c) = (origins(&s.train), origins(&s.val), origins(&s.test));
    assert!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c));
    assert_eq!(s.train.len() + s.val.len() + s.test.len(), data.len());
    let total = a.len() + b.len() + c.len();
    assert_eq!(a.len(), (4 * total + 3) / 6);
    assert_eq!(s, split_dataset(&data, 8));
}

#[test]
fn dataset_files_round_trip() {
    let lib = library(5, 9);
    let data = build_dataset(&lib, PolicyKind::NaiveGreedy, &AugmentConfig::default());
    let mut buf = Vec::new();
    write_dataset(&mut buf, &data).unwrap();
    let back = read_dataset(buf.as_slice()).unwrap();
    assert_eq!(back.len(), data.len());
    for (x, y) in back.iter().zip(&data) {
        assert_eq!(x.sequent, y.sequent);
        assert_eq!(x.ret.to_bits(), y.ret.to_bits());
        assert_eq!((x.origin, x.one_step, x.depth), (y.origin, y.one_step, y.depth));
    }
}
