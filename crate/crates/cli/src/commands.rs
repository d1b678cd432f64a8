use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use iplrl::augment::{build_dataset, library_examples, split_dataset, AugmentConfig};
use iplrl::calculus::{check_proof, decide, parse_proof, Decision};
use iplrl::generator::{build_library, format_library, read_library, LibraryConfig};
use iplrl::graphenc::GraphFormat;
use iplrl::pipeline::{api_iterate, benchmark, write_api_log, ApiConfig, Budget, Prover};
use iplrl::search::{greedy_dfs, DfsOutcome, LengthHeuristic, PolicyKind, SearchConfig, SequentValue};
use iplrl::syntax::{parse_formula, parse_sequent, Sequent};
use iplrl::valuemodel::{
    constant_baseline_mse, load_model, read_dataset, save_model, train, write_dataset, GnnModel, TrainConfig,
    ValueModel,
};

use crate::{
    AugmentArgs, BenchArgs, CheckArgs, Cli, Command, DecideArgs, FormatArg, GenArgs, Preset, ProveArgs, TrainArgs,
    TrainOpts, Verdict,
};

pub fn run(cli: &Cli) -> Result<Verdict> {
    match &cli.command {
        Command::Gen(a) => gen(cli, a),
        Command::Augment(a) => augment(cli, a),
        Command::Train(a) => train_cmd(cli, a),
        Command::Api(a) => api(cli, a),
        Command::Prove(a) => prove(cli, a),
        Command::Decide(a) => decide_cmd(a),
        Command::Check(a) => check(a),
        Command::Bench(a) => bench(cli, a),
    }
}

/// Writes to `path`, or to standard output when absent.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_goals(path: &Path) -> Result<Vec<Sequent>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_library(BufReader::new(f)).with_context(|| format!("in {}", path.display()))
}

/// Formula or sequent text; a bare formula `A` means `|- A`.
fn parse_goal(text: &str) -> Result<Sequent> {
    let text = text.trim();
    if text.contains("|-") {
        Ok(parse_sequent(text)?)
    } else {
        Ok(Sequent::goal(parse_formula(text)?))
    }
}

fn load(path: &Path) -> Result<ValueModel> {
    load_model(path).with_context(|| format!("cannot load model {}", path.display()))
}

fn gen(cli: &Cli, a: &GenArgs) -> Result<Verdict> {
    let count = a.count.unwrap_or(50);
    let mut cfg = match a.preset {
        Preset::Desk => LibraryConfig::desk(count, cli.seed),
        Preset::DeskExam => LibraryConfig::desk_exam(count, cli.seed),
        Preset::FullTrain => LibraryConfig::full_train(cli.seed),
        Preset::FullExam => LibraryConfig::full_exam(cli.seed),
    };
    if let Some(c) = a.count {
        cfg.count = c;
    }
    let (lo, hi) = (cfg.length.start(), cfg.length.end());
    cfg.length = a.min_length.unwrap_or(*lo)..=a.max_length.unwrap_or(*hi);
    let (lo, hi) = (cfg.vars.start(), cfg.vars.end());
    cfg.vars = a.min_vars.unwrap_or(*lo)..=a.max_vars.unwrap_or(*hi);
    if let Some(x) = a.alpha {
        if !(x > 0.0 && x.is_finite()) {
            bail!("--alpha must be positive");
        }
        cfg.dirichlet_alpha = x;
    }
    if let Some(x) = a.decide_budget {
        cfg.decide_budget = x;
    }
    if let Some(x) = a.max_attempts {
        cfg.max_attempts = x;
    }
    let clock = Instant::now();
    let lib = build_library(&cfg)?;
    log::info!(
        "{} theorems from {} candidates in {:.1}s",
        lib.theorems.len(),
        lib.stats.attempts,
        clock.elapsed().as_secs_f64()
    );
    let mut out = output(a.out.as_deref())?;
    out.write_all(format_library(&lib, &cfg).as_bytes())?;
    out.flush()?;
    Ok(Verdict::Success)
}

fn augment(cli: &Cli, a: &AugmentArgs) -> Result<Verdict> {
    let lib = read_goals(&a.library)?;
    let model = a.model.as_deref().map(load).transpose()?;
    let policy = match &model {
        Some(m) => PolicyKind::Value(m),
        None => PolicyKind::NaiveGreedy,
    };
    let cfg = AugmentConfig {
        n_ge2: a.n_ge2,
        n_eq1: a.n_eq1,
        search: SearchConfig {
            gamma: cli.gamma,
            step_limit: a.step_limit,
            ..SearchConfig::default()
        },
    };
    let data = if a.no_augmentation {
        library_examples(&lib, policy, &cfg.search)
    } else {
        build_dataset(&lib, policy, &cfg)
    };
    log::info!("{} examples from {} theorems", data.len(), lib.len());
    let mut out = output(a.out.as_deref())?;
    write_dataset(&mut out, &data)?;
    out.flush()?;
    Ok(Verdict::Success)
}

fn train_config(cli: &Cli, o: &TrainOpts) -> Result<TrainConfig> {
    if o.batch_size == 0 || o.hidden == 0 {
        bail!("--batch-size and --hidden must be positive");
    }
    Ok(TrainConfig {
        epochs: o.epochs,
        batch_size: o.batch_size,
        learning_rate: o.learning_rate,
        hidden: o.hidden,
        steps: o.steps,
        seed: cli.seed,
    })
}

fn train_cmd(cli: &Cli, a: &TrainArgs) -> Result<Verdict> {
    let f = File::open(&a.data).with_context(|| format!("cannot open {}", a.data.display()))?;
    let data = read_dataset(BufReader::new(f))?;
    let split = split_dataset(&data, cli.seed);
    let cfg = train_config(cli, &a.opts)?;
    log::info!(
        "training {} on {} / {} / {} examples",
        a.opts.kind,
        split.train.len(),
        split.val.len(),
        split.test.len()
    );
    let report = train(a.opts.kind, &split.train, &split.val, &split.test, &cfg)?;
    let mut out = io::stdout().lock();
    writeln!(out, "epoch,train_mse,val_mse,test_mse")?;
    for e in &report.history {
        writeln!(out, "{},{},{},{}", e.epoch, e.train_mse, e.val_mse, e.test_mse)?;
    }
    writeln!(
        out,
        "best epoch {}: train {:.5} val {:.5} test {:.5} (constant predictor {:.5})",
        report.best_epoch,
        report.train_mse,
        report.val_mse,
        report.test_mse,
        constant_baseline_mse(&split.train, &split.test)
    )?;
    save_model(&report.model, &a.out)?;
    Ok(Verdict::Success)
}

fn api(cli: &Cli, a: &crate::ApiArgs) -> Result<Verdict> {
    if a.iterations == 0 {
        bail!("--iterations must be at least 1");
    }
    let lib = read_goals(&a.library)?;
    let cfg = ApiConfig {
        iterations: a.iterations,
        kind: a.opts.kind,
        augment: AugmentConfig {
            n_ge2: a.n_ge2,
            n_eq1: a.n_eq1,
            search: SearchConfig {
                gamma: cli.gamma,
                step_limit: a.step_limit,
                ..SearchConfig::default()
            },
        },
        train: train_config(cli, &a.opts)?,
        eval_step_limit: a.eval_step_limit,
        augmentation: !a.no_augmentation,
        split_seed: cli.seed,
    };
    let result = api_iterate(&lib, &cfg)?;
    fs::create_dir_all(&a.out_dir)?;
    for (i, m) in result.models.iter().enumerate() {
        save_model(m, &a.out_dir.join(format!("model_{}.txt", i + 1)))?;
    }
    write_api_log(File::create(a.out_dir.join("api_log.csv"))?, &result)?;
    let rates: Vec<String> = result.solve_rates().iter().map(|r| format!("{:.1}%", 100.0 * r)).collect();
    println!("solve rates: {}", rates.join(" -> "));
    Ok(Verdict::Success)
}

fn prove(cli: &Cli, a: &ProveArgs) -> Result<Verdict> {
    let text = fs::read_to_string(&a.goal_file).with_context(|| format!("cannot open {}", a.goal_file.display()))?;
    let line = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .context("the goal file is empty")?;
    let goal = parse_goal(line)?;
    let mut model = a.model.as_deref().map(load).transpose()?;
    if let (Some(ValueModel::Gnn(g)), Some(f)) = (&mut model, a.format) {
        let mut cfg = *g.config();
        cfg.format = match f {
            FormatArg::Vm => GraphFormat::Vm,
            FormatArg::Tm => GraphFormat::Tm,
        };
        *g = GnnModel::from_params(cfg, g.params().to_vec()).map_err(anyhow::Error::msg)?;
    } else if a.format.is_some() && !matches!(model, Some(ValueModel::Gnn(_))) {
        log::warn!("--format only applies to graph models; ignored");
    }
    let heuristic = LengthHeuristic { gamma: cli.gamma };
    let value: &dyn SequentValue = match &model {
        Some(m) => m,
        None => &heuristic,
    };
    let cfg = SearchConfig {
        gamma: cli.gamma,
        step_limit: a.step_limit,
        time_limit: a.time_limit.map(Duration::from_secs_f64),
        backtracking: true,
    };
    let clock = Instant::now();
    let out = greedy_dfs(&goal, value, &cfg);
    let elapsed = clock.elapsed().as_secs_f64();
    match out {
        DfsOutcome::Proved { proof, steps } => {
            check_proof(&proof, &goal).context("the search produced an invalid certificate")?;
            println!("proved");
            println!("steps {steps}");
            println!("seconds {elapsed:.3}");
            if let Some(p) = &a.proof_out {
                fs::write(p, proof.to_text() + "\n")?;
                println!("certificate {}", p.display());
            }
            Ok(Verdict::Success)
        }
        DfsOutcome::Failed { steps, reason } => {
            println!("failed ({reason:?})");
            println!("steps {steps}");
            println!("seconds {elapsed:.3}");
            Ok(Verdict::Negative)
        }
    }
}

fn decide_cmd(a: &DecideArgs) -> Result<Verdict> {
    if a.budget == 0 {
        bail!("--budget must be at least 1");
    }
    let goal = parse_goal(&a.goal)?;
    match decide(&goal, a.budget) {
        Decision::Provable(proof) => {
            check_proof(&proof, &goal).context("the decision procedure produced an invalid certificate")?;
            println!("provable");
            let text = proof.to_text() + "\n";
            match &a.proof_out {
                Some(p) => fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(Verdict::Success)
        }
        Decision::Unprovable => {
            println!("unprovable");
            Ok(Verdict::Negative)
        }
        Decision::BudgetExceeded => {
            println!("unknown (budget exceeded)");
            Ok(Verdict::Negative)
        }
    }
}

fn check(a: &CheckArgs) -> Result<Verdict> {
    let text = fs::read_to_string(&a.proof).with_context(|| format!("cannot open {}", a.proof.display()))?;
    let proof = match parse_proof(&text) {
        Ok(p) => p,
        Err(e) => {
            println!("invalid: {e}");
            return Ok(Verdict::Negative);
        }
    };
    let goal = match &a.goal {
        Some(g) => parse_goal(g)?,
        None => proof.sequent.clone(),
    };
    match check_proof(&proof, &goal) {
        Ok(()) => {
            println!("ok: {} nodes prove {goal}", proof.size());
            Ok(Verdict::Success)
        }
        Err(e) => {
            println!("{e}");
            Ok(Verdict::Negative)
        }
    }
}

fn bench(cli: &Cli, a: &BenchArgs) -> Result<Verdict> {
    let mut limits: Vec<Budget> = Vec::new();
    for &s in &a.time_limits {
        if !(s > 0.0 && s.is_finite()) {
            bail!("--time-limits must be positive");
        }
        limits.push(Budget::Seconds(s));
    }
    for &n in &a.step_limits {
        if n == 0 {
            bail!("--step-limits must be positive");
        }
        limits.push(Budget::Steps(n));
    }
    if limits.is_empty() {
        bail!("give --time-limits or --step-limits");
    }
    let exam = read_goals(&a.exam)?;
    let mut models: Vec<(String, Option<ValueModel>)> = Vec::new();
    for item in &a.provers {
        let item = item.trim();
        let entry = match item.split_once('=') {
            Some((id, path)) => (id.to_owned(), Some(load(Path::new(path))?)),
            None if item == "pi0" => (item.to_owned(), None),
            None => {
                let path = a
                    .model
                    .as_deref()
                    .with_context(|| format!("prover `{item}` needs --model or `{item}=FILE`"))?;
                (item.to_owned(), Some(load(path)?))
            }
        };
        if models.iter().any(|(id, _)| *id == entry.0) {
            bail!("duplicate prover id `{}`", entry.0);
        }
        models.push(entry);
    }
    let provers: Vec<Prover<'_>> = models
        .iter()
        .map(|(id, m)| Prover {
            id: id.clone(),
            model: m.as_ref(),
        })
        .collect();
    let result = benchmark(&exam, &provers, &limits, cli.gamma);
    // Step-limited runs are reproducible only without wall-clock columns.
    let timings = !a.time_limits.is_empty();
    result.write_csvs(&a.out_dir, timings)?;
    for agg in &result.aggregates {
        println!("{} {} {:.1}%", agg.prover, agg.limit, 100.0 * agg.solve_rate);
    }
    Ok(Verdict::Success)
}
