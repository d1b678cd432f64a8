//! Model files: a small versioned key-value text format.
//!
//! ```text
//! iplrl-value-model 1
//! kind gnn-tm
//! hidden 16
//! steps 6
//! weights 3105
//! 0.123...
//! ...
//! end
//! ```
//!
//! BoW files carry `max_var` instead of `hidden` and `steps`. Weights are
//! written in shortest round-trip notation, so loading is bit-exact.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{BowModel, GnnConfig, GnnModel, ModelKind, ValueModel};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "iplrl-value-model";

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("unsupported model file version {found} (expected {FORMAT_VERSION})")]
    Version { found: String },
    #[error("model is {found}, expected {expected}")]
    KindMismatch { expected: ModelKind, found: ModelKind },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("malformed model file at line {line}: {message}")]
    Malformed { line: usize, message: String },
}

pub fn model_to_text(model: &ValueModel) -> String {
    let mut out = format!("{MAGIC} {FORMAT_VERSION}\nkind {}\n", model.kind());
    match model {
        ValueModel::Bow(b) => out.push_str(&format!("max_var {}\n", b.max_var())),
        ValueModel::Gnn(g) => out.push_str(&format!("hidden {}\nsteps {}\n", g.config().hidden, g.config().steps)),
    }
    out.push_str(&format!("weights {}\n", model.params().len()));
    for w in model.params() {
        out.push_str(&format!("{w}\n"));
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str, ModelIoError> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok(l.trim())
            }
            None => Err(self.error("unexpected end of file")),
        }
    }

    fn error(&self, message: impl Into<String>) -> ModelIoError {
        ModelIoError::Malformed {
            line: self.last.max(1),
            message: message.into(),
        }
    }

    fn field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, ModelIoError> {
        let line = self.next()?;
        let value = line
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| self.error(format!("expected `{key} <value>`")))?;
        value.parse().map_err(|_| self.error(format!("bad value for {key}: `{value}`")))
    }
}

pub fn model_from_text(text: &str) -> Result<ValueModel, ModelIoError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let header = lines.next()?;
    let version = header
        .strip_prefix(MAGIC)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| lines.error("not a value model file"))?;
    if version != FORMAT_VERSION.to_string() {
        return Err(ModelIoError::Version {
            found: version.to_owned(),
        });
    }
    let kind: String = lines.field("kind")?;
    let kind: ModelKind = kind.parse().map_err(|e: String| lines.error(e))?;
    let (max_var, gnn) = match kind.graph_format() {
        None => (lines.field::<u32>("max_var")?, None),
        Some(format) => {
            let hidden = lines.field("hidden")?;
            let steps = lines.field("steps")?;
            (0, Some(GnnConfig { hidden, steps, format }))
        }
    };
    let count: usize = lines.field("weights")?;
    let mut params = Vec::with_capacity(count.min(1 << 24));
    for _ in 0..count {
        let l = lines.next()?;
        params.push(l.parse::<f64>().map_err(|_| lines.error(format!("bad weight `{l}`")))?);
    }
    if lines.next()? != "end" {
        return Err(lines.error("expected `end`"));
    }
    match gnn {
        None => BowModel::from_params(max_var, params).map(ValueModel::Bow),
        Some(cfg) => GnnModel::from_params(cfg, params).map(ValueModel::Gnn),
    }
    .map_err(ModelIoError::Shape)
}

pub fn save_model(model: &ValueModel, path: &Path) -> Result<(), ModelIoError> {
    fs::write(path, model_to_text(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ValueModel, ModelIoError> {
    model_from_text(&fs::read_to_string(path)?)
}

/// Loads a model and checks that it has the expected kind.
pub fn load_model_as(path: &Path, expected: ModelKind) -> Result<ValueModel, ModelIoError> {
    let m = load_model(path)?;
    if m.kind() != expected {
        return Err(ModelIoError::KindMismatch {
            expected,
            found: m.kind(),
        });
    }
    Ok(m)
}
