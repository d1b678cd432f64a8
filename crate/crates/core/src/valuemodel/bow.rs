//! Bag-of-words linear baseline: symbol counts per side of the sequent.

use thiserror::Error;

use crate::syntax::{Formula, Kind, Sequent};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("variable P{index} exceeds the feature range P1..P{max}")]
pub struct FeatureError {
    pub index: u32,
    pub max: u32,
}

/// Features per side: `P1..Pm`, then false, `&`, `|`, `->`.
pub fn side_width(m: u32) -> usize {
    m as usize + 4
}

fn count(f: &Formula, m: u32, strict: bool, out: &mut [f64]) -> Result<(), FeatureError> {
    let m_us = m as usize;
    match f.kind() {
        Kind::Var(i) => {
            if *i > m {
                if strict {
                    return Err(FeatureError { index: *i, max: m });
                }
            } else {
                out[*i as usize - 1] += 1.0;
            }
        }
        Kind::Bottom => out[m_us] += 1.0,
        Kind::And(a, b) | Kind::Or(a, b) | Kind::Imp(a, b) => {
            out[m_us
                + match f.kind() {
                    Kind::And(..) => 1,
                    Kind::Or(..) => 2,
                    _ => 3,
                }] += 1.0;
            count(a, m, strict, out)?;
            count(b, m, strict, out)?;
        }
    }
    Ok(())
}

fn features_impl(s: &Sequent, m: u32, strict: bool) -> Result<Vec<f64>, FeatureError> {
    let w = side_width(m);
    let mut v = vec![0.0; 2 * w];
    let (ante, cons) = v.split_at_mut(w);
    for a in s.antecedents() {
        count(a, m, strict, ante)?;
    }
    count(s.consequent(), m, strict, cons)?;
    Ok(v)
}

/// Antecedent-side counts followed by consequent-side counts.
pub fn bow_features(s: &Sequent, m: u32) -> Result<Vec<f64>, FeatureError> {
    features_impl(s, m, true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BowModel {
    m: u32,
    // Feature weights followed by the bias.
    params: Vec<f64>,
}

impl BowModel {
    /// Zero weights with bias 0.5, the middle of the output range.
    pub fn new(m: u32) -> BowModel {
        let mut params = vec![0.0; 2 * side_width(m) + 1];
        *params.last_mut().expect("bias") = 0.5;
        BowModel { m, params }
    }

    pub fn from_params(m: u32, params: Vec<f64>) -> Result<BowModel, String> {
        let want = 2 * side_width(m) + 1;
        if params.len() != want {
            return Err(format!("expected {want} weights for m={m}, found {}", params.len()));
        }
        Ok(BowModel { m, params })
    }

    pub fn max_var(&self) -> u32 {
        self.m
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Features for evaluation; variables beyond `m` were never seen in
    /// training and are ignored.
    pub fn features(&self, s: &Sequent) -> Vec<f64> {
        features_impl(s, self.m, false).expect("lenient counting never fails")
    }

    fn linear(&self, x: &[f64]) -> f64 {
        let (w, b) = self.params.split_at(x.len());
        x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b[0]
    }

    pub fn evaluate(&self, s: &Sequent) -> f64 {
        self.evaluate_features(&self.features(s))
    }

    pub fn evaluate_features(&self, x: &[f64]) -> f64 {
        self.linear(x).clamp(0.0, 1.0)
    }

    /// Squared error of the clamped output; the clamp passes no gradient
    /// outside `[0, 1]`.
    pub fn loss_and_grad(&self, x: &[f64], target: f64, grad: &mut [f64]) -> f64 {
        let z = self.linear(x);
        let y = z.clamp(0.0, 1.0);
        let err = y - target;
        if z > 0.0 && z < 1.0 {
            let d = 2.0 * err;
            for (g, xi) in grad.iter_mut().zip(x) {
                *g += d * xi;
            }
            *grad.last_mut().expect("bias") += d;
        }
        err * err
    }
}
