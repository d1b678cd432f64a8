//! Mean-squared-error regression of returns with mini-batch Adam.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::{Adam, BowModel, Example, GnnConfig, GnnModel, ModelKind, ValueModel};
use crate::graphenc::{encode, LabeledGraph};
use crate::syntax::Sequent;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden: usize,
    pub steps: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 32,
            learning_rate: 1e-3,
            hidden: super::DEFAULT_HIDDEN,
            steps: super::DEFAULT_STEPS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean loss over the epoch's mini-batches, measured before each update.
    pub train_mse: f64,
    pub val_mse: f64,
    pub test_mse: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Parameters of the epoch with the lowest validation error (the last
    /// epoch when there is no validation data).
    pub model: ValueModel,
    pub history: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    pub test_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrainError {
    #[error("the training split is empty")]
    EmptyTrainingSet,
    #[error("batch size must be positive")]
    ZeroBatchSize,
}

/// The model-specific part of training.
trait Net: Sync {
    type Input: Sync + Send;
    fn prepare(&self, s: &Sequent) -> Self::Input;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    fn predict(&self, x: &Self::Input) -> f64;
    fn loss_and_grad(&self, x: &Self::Input, target: f64, grad: &mut [f64]) -> f64;
}

impl Net for BowModel {
    type Input = Vec<f64>;
    fn prepare(&self, s: &Sequent) -> Vec<f64> {
        self.features(s)
    }
    fn params(&self) -> &[f64] {
        BowModel::params(self)
    }
    fn params_mut(&mut self) -> &mut [f64] {
        BowModel::params_mut(self)
    }
    fn predict(&self, x: &Vec<f64>) -> f64 {
        self.evaluate_features(x)
    }
    fn loss_and_grad(&self, x: &Vec<f64>, target: f64, grad: &mut [f64]) -> f64 {
        BowModel::loss_and_grad(self, x, target, grad)
    }
}

impl Net for GnnModel {
    type Input = LabeledGraph;
    fn prepare(&self, s: &Sequent) -> LabeledGraph {
        encode(s, self.config().format)
    }
    fn params(&self) -> &[f64] {
        GnnModel::params(self)
    }
    fn params_mut(&mut self) -> &mut [f64] {
        GnnModel::params_mut(self)
    }
    fn predict(&self, x: &LabeledGraph) -> f64 {
        self.evaluate_graph(x)
    }
    fn loss_and_grad(&self, x: &LabeledGraph, target: f64, grad: &mut [f64]) -> f64 {
        GnnModel::loss_and_grad(self, x, target, grad)
    }
}

/// Mean squared error of `model` on `data` (0 for empty data).
pub fn mse(model: &ValueModel, data: &[Example]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let errs: Vec<f64> = data
        .par_iter()
        .map(|e| {
            let d = model.evaluate(&e.sequent) - e.ret;
            d * d
        })
        .collect();
    errs.iter().sum::<f64>() / data.len() as f64
}

/// Test error of the best constant predictor, i.e. the training mean.
pub fn constant_baseline_mse(train: &[Example], test: &[Example]) -> f64 {
    if train.is_empty() || test.is_empty() {
        return 0.0;
    }
    let c = train.iter().map(|e| e.ret).sum::<f64>() / train.len() as f64;
    test.iter().map(|e| (e.ret - c) * (e.ret - c)).sum::<f64>() / test.len() as f64
}

fn split_mse<N: Net>(net: &N, xs: &[N::Input], ys: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let errs: Vec<f64> = xs
        .par_iter()
        .zip(ys)
        .map(|(x, y)| {
            let d = net.predict(x) - y;
            d * d
        })
        .collect();
    errs.iter().sum::<f64>() / xs.len() as f64
}

struct Prepared<I> {
    xs: Vec<I>,
    ys: Vec<f64>,
}

fn prepare<N: Net>(net: &N, data: &[Example]) -> Prepared<N::Input> {
    Prepared {
        xs: data.par_iter().map(|e| net.prepare(&e.sequent)).collect(),
        ys: data.iter().map(|e| e.ret).collect(),
    }
}

struct Fit {
    params: Vec<f64>,
    history: Vec<EpochMetrics>,
    best_epoch: usize,
}

fn fit<N: Net>(net: &mut N, splits: [&[Example]; 3], cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Fit {
    let [train, val, test] = splits.map(|d| prepare(net, d));
    let n_params = net.params().len();
    let mut adam = Adam::new(n_params, cfg.learning_rate);
    let mut order: Vec<usize> = (0..train.xs.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Vec<f64>)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let net_ref: &N = net;
            // Per-example gradients in parallel, summed in batch order.
            let parts: Vec<(f64, Vec<f64>)> = batch
                .par_iter()
                .map(|&i| {
                    let mut g = vec![0.0; n_params];
                    let l = net_ref.loss_and_grad(&train.xs[i], train.ys[i], &mut g);
                    (l, g)
                })
                .collect();
            let mut grad = vec![0.0; n_params];
            for (l, g) in &parts {
                loss_sum += l;
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += b;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            for g in &mut grad {
                *g *= scale;
            }
            adam.step(net.params_mut(), &grad);
        }
        let m = EpochMetrics {
            epoch,
            train_mse: loss_sum / train.xs.len() as f64,
            val_mse: split_mse(net, &val.xs, &val.ys),
            test_mse: split_mse(net, &test.xs, &test.ys),
        };
        log::debug!(
            "epoch {epoch}: train {:.5} val {:.5} test {:.5}",
            m.train_mse,
            m.val_mse,
            m.test_mse
        );
        history.push(m);
        let score = if val.xs.is_empty() { 0.0 } else { m.val_mse };
        if best.as_ref().is_none_or(|(b, ..)| score < *b || val.xs.is_empty()) {
            best = Some((score, epoch, net.params().to_vec()));
        }
    }
    match best {
        Some((_, best_epoch, params)) => Fit {
            params,
            history,
            best_epoch,
        },
        None => Fit {
            params: net.params().to_vec(),
            history,
            best_epoch: 0,
        },
    }
}

/// Trains a fresh model of `kind`. Initialisation and shuffling are driven
/// by `cfg.seed`, so results are reproducible.
pub fn train(kind: ModelKind, train: &[Example], val: &[Example], test: &[Example], cfg: &TrainConfig) -> Result<TrainReport, TrainError> {
    if train.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    if cfg.batch_size == 0 {
        return Err(TrainError::ZeroBatchSize);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let splits = [train, val, test];
    let model = match kind.graph_format() {
        None => {
            let m = splits
                .iter()
                .flat_map(|d| d.iter())
                .map(|e| e.sequent.max_var())
                .max()
                .unwrap_or(0);
            let mut net = BowModel::new(m);
            let fit = fit(&mut net, splits, cfg, &mut rng);
            net.params_mut().copy_from_slice(&fit.params);
            (ValueModel::Bow(net), fit)
        }
        Some(format) => {
            let gc = GnnConfig {
                hidden: cfg.hidden,
                steps: cfg.steps,
                format,
            };
            let mut net = GnnModel::new(gc, &mut rng);
            let fit = fit(&mut net, splits, cfg, &mut rng);
            net.params_mut().copy_from_slice(&fit.params);
            (ValueModel::Gnn(net), fit)
        }
    };
    let (model, fit) = model;
    Ok(TrainReport {
        train_mse: mse(&model, train),
        val_mse: mse(&model, val),
        test_mse: mse(&model, test),
        model,
        history: fit.history,
        best_epoch: fit.best_epoch,
    })
}
