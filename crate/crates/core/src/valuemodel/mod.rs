//! Value functions over sequents: a bag-of-words linear baseline and a gated
//! GNN over sequent graphs, with supervised training and model files.

mod adam;
mod bow;
mod data;
mod gnn;
mod gradcheck;
mod io;
mod linalg;
mod train;

use std::fmt;
use std::str::FromStr;

pub use adam::Adam;
pub use bow::{bow_features, BowModel, FeatureError};
pub use data::{format_example, format_return, parse_example, read_dataset, write_dataset, Dataset, DatasetError, Example};
pub use gnn::{param_count, GnnConfig, GnnModel, DEFAULT_HIDDEN, DEFAULT_STEPS};
pub use gradcheck::{gradient_check, GradientCheck};
pub use io::{load_model, load_model_as, model_from_text, model_to_text, save_model, ModelIoError, FORMAT_VERSION};
pub use train::{constant_baseline_mse, mse, train, EpochMetrics, TrainConfig, TrainError, TrainReport};

use crate::graphenc::GraphFormat;
use crate::search::SequentValue;
use crate::syntax::Sequent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Bow,
    GnnVm,
    GnnTm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Bow, ModelKind::GnnVm, ModelKind::GnnTm];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Bow => "bow",
            ModelKind::GnnVm => "gnn-vm",
            ModelKind::GnnTm => "gnn-tm",
        }
    }

    pub fn graph_format(self) -> Option<GraphFormat> {
        match self {
            ModelKind::Bow => None,
            ModelKind::GnnVm => Some(GraphFormat::Vm),
            ModelKind::GnnTm => Some(GraphFormat::Tm),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown model kind `{s}` (expected bow, gnn-vm or gnn-tm)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValueModel {
    Bow(BowModel),
    Gnn(GnnModel),
}

impl ValueModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            ValueModel::Bow(_) => ModelKind::Bow,
            ValueModel::Gnn(g) => match g.config().format {
                GraphFormat::Vm => ModelKind::GnnVm,
                GraphFormat::Tm => ModelKind::GnnTm,
            },
        }
    }

    pub fn evaluate(&self, s: &Sequent) -> f64 {
        match self {
            ValueModel::Bow(b) => b.evaluate(s),
            ValueModel::Gnn(g) => g.evaluate(s),
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            ValueModel::Bow(b) => b.params(),
            ValueModel::Gnn(g) => g.params(),
        }
    }
}

impl SequentValue for ValueModel {
    fn values(&self, batch: &[Sequent]) -> Vec<f64> {
        batch.iter().map(|s| self.evaluate(s)).collect()
    }
}

impl SequentValue for GnnModel {
    fn values(&self, batch: &[Sequent]) -> Vec<f64> {
        batch.iter().map(|s| self.evaluate(s)).collect()
    }
}

impl SequentValue for BowModel {
    fn values(&self, batch: &[Sequent]) -> Vec<f64> {
        batch.iter().map(|s| self.evaluate(s)).collect()
    }
}
