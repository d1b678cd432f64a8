//! Gated graph neural network over sequent graphs.
//!
//! Each vertex starts from its label embedding. A propagation step sums
//! transformed neighbour states, one transform per (direction, edge label),
//! and feeds the message into a GRU-style gate. The readout sums final
//! vertex states and applies a ReLU hidden layer and a sigmoid.

use rand::Rng;

use super::linalg::{axpy, dot, matvec_add, matvec_t_add, outer_add, sigmoid};
use crate::graphenc::{encode, GraphFormat, LabeledGraph, VertexLabel};
use crate::syntax::Sequent;

pub const DEFAULT_HIDDEN: usize = 16;
pub const DEFAULT_STEPS: usize = 6;

const LABELS: usize = VertexLabel::ALL.len();
// out-Left, out-Right, in-Left, in-Right
const KINDS: usize = 4;
// Wz, Uz, Wr, Ur, Wc, Uc
const GATES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GnnConfig {
    pub hidden: usize,
    pub steps: usize,
    pub format: GraphFormat,
}

impl Default for GnnConfig {
    fn default() -> Self {
        GnnConfig {
            hidden: DEFAULT_HIDDEN,
            steps: DEFAULT_STEPS,
            format: GraphFormat::Tm,
        }
    }
}

/// Offsets of each tensor in the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct Layout {
    h: usize,
}

impl Layout {
    fn hh(&self) -> usize {
        self.h * self.h
    }
    fn emb(&self, label: usize) -> usize {
        label * self.h
    }
    fn msg_w(&self, k: usize) -> usize {
        LABELS * self.h + k * self.hh()
    }
    fn msg_b(&self, k: usize) -> usize {
        self.msg_w(KINDS) + k * self.h
    }
    fn gate(&self, g: usize) -> usize {
        self.msg_b(KINDS) + g * self.hh()
    }
    fn read_w(&self) -> usize {
        self.gate(GATES)
    }
    fn read_b(&self) -> usize {
        self.read_w() + self.hh()
    }
    fn out_w(&self) -> usize {
        self.read_b() + self.h
    }
    fn out_b(&self) -> usize {
        self.out_w() + self.h
    }
    fn len(&self) -> usize {
        self.out_b() + 1
    }
}

pub fn param_count(hidden: usize) -> usize {
    Layout { h: hidden }.len()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    config: GnnConfig,
    params: Vec<f64>,
}

/// Intermediate values of one forward pass, kept for backpropagation.
struct Trace {
    counts: Vec<[f64; KINDS]>,
    // h[t] is the n*H state after t steps.
    h: Vec<Vec<f64>>,
    // Per step: n*KINDS*H neighbour sums, then n*H message and gate values.
    agg: Vec<Vec<f64>>,
    m: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    pooled: Vec<f64>,
    pre: Vec<f64>,
    hidden: Vec<f64>,
    y: f64,
}

impl GnnModel {
    /// Glorot-uniform matrices, zero biases.
    pub fn new<R: Rng>(config: GnnConfig, rng: &mut R) -> GnnModel {
        let l = Layout { h: config.hidden };
        let h = config.hidden as f64;
        let mut params = vec![0.0; l.len()];
        let mut fill = |range: std::ops::Range<usize>, fan_in: f64, fan_out: f64| {
            let bound = (6.0 / (fan_in + fan_out)).sqrt();
            for p in &mut params[range] {
                *p = rng.random_range(-bound..bound);
            }
        };
        fill(0..l.emb(LABELS), LABELS as f64, h);
        for k in 0..KINDS {
            fill(l.msg_w(k)..l.msg_w(k) + l.hh(), h, h);
        }
        for g in 0..GATES {
            fill(l.gate(g)..l.gate(g) + l.hh(), h, h);
        }
        fill(l.read_w()..l.read_b(), h, h);
        fill(l.out_w()..l.out_b(), h, 1.0);
        GnnModel { config, params }
    }

    pub fn from_params(config: GnnConfig, params: Vec<f64>) -> Result<GnnModel, String> {
        let want = param_count(config.hidden);
        if params.len() != want {
            return Err(format!("expected {want} weights for H={}, found {}", config.hidden, params.len()));
        }
        Ok(GnnModel { config, params })
    }

    pub fn config(&self) -> &GnnConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layout(&self) -> Layout {
        Layout { h: self.config.hidden }
    }

    /// Index range of the embedding of `label` in [`GnnModel::params`].
    pub fn embedding_range(&self, label: VertexLabel) -> std::ops::Range<usize> {
        let l = self.layout();
        l.emb(label.index())..l.emb(label.index() + 1)
    }

    pub fn encode(&self, s: &Sequent) -> LabeledGraph {
        encode(s, self.config.format)
    }

    pub fn evaluate(&self, s: &Sequent) -> f64 {
        self.evaluate_graph(&self.encode(s))
    }

    pub fn evaluate_graph(&self, g: &LabeledGraph) -> f64 {
        self.forward(g).y
    }

    /// Vertex states after `steps` propagation steps, `H` values per vertex.
    pub fn propagate(&self, g: &LabeledGraph) -> Vec<f64> {
        self.forward(g).h.pop().expect("at least the initial states")
    }

    /// Squared error against `target`; adds its gradient to `grad`.
    pub fn loss_and_grad(&self, g: &LabeledGraph, target: f64, grad: &mut [f64]) -> f64 {
        let tr = self.forward(g);
        let err = tr.y - target;
        self.backward(g, &tr, 2.0 * err, grad);
        err * err
    }

    fn forward(&self, g: &LabeledGraph) -> Trace {
        let l = self.layout();
        let hd = l.h;
        let p = &self.params;
        let n = g.vertex_count();

        let mut counts = vec![[0.0; KINDS]; n];
        for e in &g.edges {
            counts[e.source as usize][e.label.index()] += 1.0;
            counts[e.target as usize][2 + e.label.index()] += 1.0;
        }

        let mut h0 = vec![0.0; n * hd];
        for (v, label) in g.labels.iter().enumerate() {
            let e = l.emb(label.index());
            h0[v * hd..(v + 1) * hd].copy_from_slice(&p[e..e + hd]);
        }
        let steps = self.config.steps;
        let mut tr = Trace {
            counts,
            h: Vec::with_capacity(steps + 1),
            agg: Vec::with_capacity(steps),
            m: Vec::with_capacity(steps),
            z: Vec::with_capacity(steps),
            r: Vec::with_capacity(steps),
            c: Vec::with_capacity(steps),
            pooled: vec![0.0; hd],
            pre: vec![0.0; hd],
            hidden: vec![0.0; hd],
            y: 0.0,
        };
        tr.h.push(h0);

        let gate = |k: usize| &p[l.gate(k)..l.gate(k) + l.hh()];
        let mut pre = vec![0.0; hd];
        let mut rh = vec![0.0; hd];
        for _ in 0..steps {
            let h = tr.h.last().expect("initial states");
            let mut agg = vec![0.0; n * KINDS * hd];
            for e in &g.edges {
                let (s, t, lab) = (e.source as usize, e.target as usize, e.label.index());
                let (hs, ht) = (&h[s * hd..(s + 1) * hd], &h[t * hd..(t + 1) * hd]);
                axpy(1.0, ht, &mut agg[(s * KINDS + lab) * hd..][..hd]);
                axpy(1.0, hs, &mut agg[(t * KINDS + 2 + lab) * hd..][..hd]);
            }
            let mut m = vec![0.0; n * hd];
            let mut z = vec![0.0; n * hd];
            let mut r = vec![0.0; n * hd];
            let mut c = vec![0.0; n * hd];
            let mut next = vec![0.0; n * hd];
            for v in 0..n {
                let hv = &h[v * hd..(v + 1) * hd];
                let mv = &mut m[v * hd..(v + 1) * hd];
                for k in 0..KINDS {
                    let cnt = tr.counts[v][k];
                    if cnt == 0.0 {
                        continue;
                    }
                    let a = &agg[(v * KINDS + k) * hd..][..hd];
                    matvec_add(&p[l.msg_w(k)..l.msg_w(k) + l.hh()], a, mv);
                    axpy(cnt, &p[l.msg_b(k)..l.msg_b(k) + hd], mv);
                }
                let mv = &m[v * hd..(v + 1) * hd];

                pre.fill(0.0);
                matvec_add(gate(0), mv, &mut pre);
                matvec_add(gate(1), hv, &mut pre);
                let zv = &mut z[v * hd..(v + 1) * hd];
                for (zi, x) in zv.iter_mut().zip(&pre) {
                    *zi = sigmoid(*x);
                }

                pre.fill(0.0);
                matvec_add(gate(2), mv, &mut pre);
                matvec_add(gate(3), hv, &mut pre);
                let rv = &mut r[v * hd..(v + 1) * hd];
                for (ri, x) in rv.iter_mut().zip(&pre) {
                    *ri = sigmoid(*x);
                }

                for i in 0..hd {
                    rh[i] = rv[i] * hv[i];
                }
                pre.fill(0.0);
                matvec_add(gate(4), mv, &mut pre);
                matvec_add(gate(5), &rh, &mut pre);
                let cv = &mut c[v * hd..(v + 1) * hd];
                for (ci, x) in cv.iter_mut().zip(&pre) {
                    *ci = x.tanh();
                }

                let zv = &z[v * hd..(v + 1) * hd];
                for i in 0..hd {
                    next[v * hd + i] = (1.0 - zv[i]) * hv[i] + zv[i] * cv[i];
                }
            }
            tr.agg.push(agg);
            tr.m.push(m);
            tr.z.push(z);
            tr.r.push(r);
            tr.c.push(c);
            tr.h.push(next);
        }

        let last = tr.h.last().expect("final states");
        for v in 0..n {
            axpy(1.0, &last[v * hd..(v + 1) * hd], &mut tr.pooled);
        }
        tr.pre.copy_from_slice(&p[l.read_b()..l.read_b() + hd]);
        matvec_add(&p[l.read_w()..l.read_b()], &tr.pooled, &mut tr.pre);
        for (q, u) in tr.hidden.iter_mut().zip(&tr.pre) {
            *q = u.max(0.0);
        }
        let logit = dot(&p[l.out_w()..l.out_b()], &tr.hidden) + p[l.out_b()];
        tr.y = sigmoid(logit);
        tr
    }

    fn backward(&self, g: &LabeledGraph, tr: &Trace, dy: f64, grad: &mut [f64]) {
        let l = self.layout();
        let hd = l.h;
        let p = &self.params;
        let n = g.vertex_count();

        let dlogit = dy * tr.y * (1.0 - tr.y);
        grad[l.out_b()] += dlogit;
        axpy(dlogit, &tr.hidden, &mut grad[l.out_w()..l.out_b()]);
        let mut du = vec![0.0; hd];
        for i in 0..hd {
            if tr.pre[i] > 0.0 {
                du[i] = dlogit * p[l.out_w() + i];
            }
        }
        axpy(1.0, &du, &mut grad[l.read_b()..l.read_b() + hd]);
        outer_add(&mut grad[l.read_w()..l.read_b()], &du, &tr.pooled);
        let mut dpooled = vec![0.0; hd];
        matvec_t_add(&p[l.read_w()..l.read_b()], &du, &mut dpooled);

        let mut dh = vec![0.0; n * hd];
        for v in 0..n {
            dh[v * hd..(v + 1) * hd].copy_from_slice(&dpooled);
        }

        let gate = |k: usize| l.gate(k)..l.gate(k) + l.hh();
        let mut dz = vec![0.0; hd];
        let mut dcp = vec![0.0; hd];
        let mut drh = vec![0.0; hd];
        let mut drp = vec![0.0; hd];
        let mut rh = vec![0.0; hd];
        let mut dm = vec![0.0; hd];
        for t in (0..self.config.steps).rev() {
            let (h, agg, m, z, r, c) = (&tr.h[t], &tr.agg[t], &tr.m[t], &tr.z[t], &tr.r[t], &tr.c[t]);
            let mut dprev = vec![0.0; n * hd];
            let mut dagg = vec![0.0; n * KINDS * hd];
            for v in 0..n {
                let s = v * hd..(v + 1) * hd;
                let (hv, mv, zv, rv, cv) = (&h[s.clone()], &m[s.clone()], &z[s.clone()], &r[s.clone()], &c[s.clone()]);
                let dn = &dh[s.clone()];
                let dp = &mut dprev[s.clone()];
                for i in 0..hd {
                    dz[i] = dn[i] * (cv[i] - hv[i]) * zv[i] * (1.0 - zv[i]);
                    dcp[i] = dn[i] * zv[i] * (1.0 - cv[i] * cv[i]);
                    dp[i] += dn[i] * (1.0 - zv[i]);
                    rh[i] = rv[i] * hv[i];
                }
                dm.fill(0.0);

                outer_add(&mut grad[gate(4)], &dcp, mv);
                outer_add(&mut grad[gate(5)], &dcp, &rh);
                matvec_t_add(&p[gate(4)], &dcp, &mut dm);
                drh.fill(0.0);
                matvec_t_add(&p[gate(5)], &dcp, &mut drh);
                for i in 0..hd {
                    drp[i] = drh[i] * hv[i] * rv[i] * (1.0 - rv[i]);
                    dp[i] += drh[i] * rv[i];
                }

                outer_add(&mut grad[gate(0)], &dz, mv);
                outer_add(&mut grad[gate(1)], &dz, hv);
                matvec_t_add(&p[gate(0)], &dz, &mut dm);
                matvec_t_add(&p[gate(1)], &dz, dp);

                outer_add(&mut grad[gate(2)], &drp, mv);
                outer_add(&mut grad[gate(3)], &drp, hv);
                matvec_t_add(&p[gate(2)], &drp, &mut dm);
                matvec_t_add(&p[gate(3)], &drp, dp);

                for k in 0..KINDS {
                    // Kinds without edges carry no message and pass no gradient.
                    let cnt = tr.counts[v][k];
                    if cnt == 0.0 {
                        continue;
                    }
                    let a = (v * KINDS + k) * hd;
                    outer_add(&mut grad[l.msg_w(k)..l.msg_w(k) + l.hh()], &dm, &agg[a..a + hd]);
                    axpy(cnt, &dm, &mut grad[l.msg_b(k)..l.msg_b(k) + hd]);
                    matvec_t_add(&p[l.msg_w(k)..l.msg_w(k) + l.hh()], &dm, &mut dagg[a..a + hd]);
                }
            }
            for e in &g.edges {
                let (s, t, lab) = (e.source as usize, e.target as usize, e.label.index());
                let from_s = (s * KINDS + lab) * hd;
                let from_t = (t * KINDS + 2 + lab) * hd;
                axpy(1.0, &dagg[from_s..from_s + hd], &mut dprev[t * hd..(t + 1) * hd]);
                axpy(1.0, &dagg[from_t..from_t + hd], &mut dprev[s * hd..(s + 1) * hd]);
            }
            dh = dprev;
        }

        for (v, label) in g.labels.iter().enumerate() {
            let e = l.emb(label.index());
            axpy(1.0, &dh[v * hd..(v + 1) * hd], &mut grad[e..e + hd]);
        }
    }
}
