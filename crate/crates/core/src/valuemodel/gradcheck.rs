use super::{BowModel, GnnModel, ValueModel};
use crate::syntax::Sequent;

/// Gradients smaller than this are compared absolutely rather than relatively.
const REL_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    /// Parameter index where the maximum was attained.
    pub worst_param: usize,
}

/// Compares the analytic gradient of the squared error at `(s, target)` with
/// central differences of step `epsilon`, parameter by parameter.
///
/// The relative error of one parameter is
/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn gradient_check(model: &ValueModel, s: &Sequent, target: f64, epsilon: f64) -> GradientCheck {
    assert!(epsilon > 0.0, "epsilon must be positive");
    match model {
        ValueModel::Bow(b) => {
            let x = b.features(s);
            let loss = |m: &BowModel| {
                let d = m.evaluate_features(&x) - target;
                d * d
            };
            let mut grad = vec![0.0; b.params().len()];
            b.loss_and_grad(&x, target, &mut grad);
            compare(b.clone(), &grad, epsilon, |m| m.params_mut(), loss)
        }
        ValueModel::Gnn(g) => {
            let graph = g.encode(s);
            let loss = |m: &GnnModel| {
                let d = m.evaluate_graph(&graph) - target;
                d * d
            };
            let mut grad = vec![0.0; g.params().len()];
            g.loss_and_grad(&graph, target, &mut grad);
            compare(g.clone(), &grad, epsilon, |m| m.params_mut(), loss)
        }
    }
}

fn compare<M>(mut m: M, grad: &[f64], eps: f64, params: impl Fn(&mut M) -> &mut [f64], loss: impl Fn(&M) -> f64) -> GradientCheck {
    let mut worst = GradientCheck {
        max_relative_error: 0.0,
        worst_param: 0,
    };
    for (i, &analytic) in grad.iter().enumerate() {
        let orig = params(&mut m)[i];
        params(&mut m)[i] = orig + eps;
        let up = loss(&m);
        params(&mut m)[i] = orig - eps;
        let down = loss(&m);
        params(&mut m)[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR);
        if rel > worst.max_relative_error {
            worst = GradientCheck {
                max_relative_error: rel,
                worst_param: i,
            };
        }
    }
    worst
}
