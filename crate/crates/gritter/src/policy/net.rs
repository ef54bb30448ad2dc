//! Small feed-forward policy/value network with hand-rolled backprop.
//!
//! Trunk of two tanh layers feeding a categorical depot head (logits) and a
//! scalar value head. Parameters live in one flat `Vec<f64>` so the Adam
//! step and finite-difference checks can treat the model as a plain vector.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Offsets of each weight block in the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    wp: usize,
    bp: usize,
    wv: usize,
    bv: usize,
    total: usize,
}

fn layout(input: usize, hidden: usize, depots: usize) -> Layout {
    let w1 = 0;
    let b1 = w1 + hidden * input;
    let w2 = b1 + hidden;
    let b2 = w2 + hidden * hidden;
    let wp = b2 + hidden;
    let bp = wp + depots * hidden;
    let wv = bp + depots;
    let bv = wv + hidden;
    Layout {
        w1,
        b1,
        w2,
        b2,
        wp,
        bp,
        wv,
        bv,
        total: bv + 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyModel {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub n_depots: usize,
    params: Vec<f64>,
    #[serde(skip)]
    pub(crate) adam: AdamState,
}

/// Activations kept from a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    pub logits: Vec<f64>,
    pub value: f64,
}

impl PolicyModel {
    /// Xavier-uniform initialization from the supplied rng stream.
    pub fn new(input_dim: usize, hidden_dim: usize, n_depots: usize, rng: &mut impl Rng) -> Self {
        let l = layout(input_dim, hidden_dim, n_depots);
        let mut params = vec![0.0; l.total];
        let mut init = |lo: usize, hi: usize, fan_in: usize, fan_out: usize| {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut params[lo..hi] {
                *p = rng.random_range(-a..a);
            }
        };
        init(l.w1, l.b1, input_dim, hidden_dim);
        init(l.w2, l.b2, hidden_dim, hidden_dim);
        init(l.wp, l.bp, hidden_dim, n_depots);
        init(l.wv, l.bv, hidden_dim, 1);
        PolicyModel {
            input_dim,
            hidden_dim,
            n_depots,
            params,
            adam: AdamState::new(l.total),
        }
    }

    fn layout(&self) -> Layout {
        layout(self.input_dim, self.hidden_dim, self.n_depots)
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        self.params[index] = value;
    }

    pub(crate) fn snapshot(&self) -> (Vec<f64>, AdamState) {
        (self.params.clone(), self.adam.clone())
    }

    pub(crate) fn restore(&mut self, snapshot: (Vec<f64>, AdamState)) {
        self.params = snapshot.0;
        self.adam = snapshot.1;
    }

    pub fn forward(&self, input: &[f64]) -> ForwardCache {
        assert_eq!(input.len(), self.input_dim);
        let l = self.layout();
        let p = &self.params;
        let mut h1 = vec![0.0; self.hidden_dim];
        for j in 0..self.hidden_dim {
            let mut acc = p[l.b1 + j];
            let row = l.w1 + j * self.input_dim;
            for (i, &x) in input.iter().enumerate() {
                acc += p[row + i] * x;
            }
            h1[j] = acc.tanh();
        }
        let mut h2 = vec![0.0; self.hidden_dim];
        for j in 0..self.hidden_dim {
            let mut acc = p[l.b2 + j];
            let row = l.w2 + j * self.hidden_dim;
            for (i, &h) in h1.iter().enumerate() {
                acc += p[row + i] * h;
            }
            h2[j] = acc.tanh();
        }
        let mut logits = vec![0.0; self.n_depots];
        for (d, logit) in logits.iter_mut().enumerate() {
            let mut acc = p[l.bp + d];
            let row = l.wp + d * self.hidden_dim;
            for (i, &h) in h2.iter().enumerate() {
                acc += p[row + i] * h;
            }
            *logit = acc;
        }
        let mut value = p[l.bv];
        for (i, &h) in h2.iter().enumerate() {
            value += p[l.wv + i] * h;
        }
        ForwardCache {
            input: input.to_vec(),
            h1,
            h2,
            logits,
            value,
        }
    }

    /// Accumulates parameter gradients for one sample given the gradients
    /// at the heads.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        dlogits: &[f64],
        dvalue: f64,
        grad: &mut [f64],
    ) {
        let l = self.layout();
        let p = &self.params;
        let mut dh2 = vec![0.0; self.hidden_dim];
        for (d, &dl) in dlogits.iter().enumerate() {
            let row = l.wp + d * self.hidden_dim;
            grad[l.bp + d] += dl;
            for i in 0..self.hidden_dim {
                grad[row + i] += dl * cache.h2[i];
                dh2[i] += dl * p[row + i];
            }
        }
        grad[l.bv] += dvalue;
        for i in 0..self.hidden_dim {
            grad[l.wv + i] += dvalue * cache.h2[i];
            dh2[i] += dvalue * p[l.wv + i];
        }

        let mut dh1 = vec![0.0; self.hidden_dim];
        for j in 0..self.hidden_dim {
            let dpre = dh2[j] * (1.0 - cache.h2[j] * cache.h2[j]);
            let row = l.w2 + j * self.hidden_dim;
            grad[l.b2 + j] += dpre;
            for i in 0..self.hidden_dim {
                grad[row + i] += dpre * cache.h1[i];
                dh1[i] += dpre * p[row + i];
            }
        }
        for j in 0..self.hidden_dim {
            let dpre = dh1[j] * (1.0 - cache.h1[j] * cache.h1[j]);
            let row = l.w1 + j * self.input_dim;
            grad[l.b1 + j] += dpre;
            for (i, &x) in cache.input.iter().enumerate() {
                grad[row + i] += dpre * x;
            }
        }
    }

    pub(crate) fn adam_step(&mut self, grad: &[f64], lr: f64) {
        self.adam.step(&mut self.params, grad, lr);
    }

    pub fn save(&self, path: &std::path::Path) -> crate::Result<()> {
        crate::artifacts::write_atomic(path, &serde_json::to_vec(self)?)
    }

    pub fn load(path: &std::path::Path) -> crate::Result<PolicyModel> {
        let mut model: PolicyModel = serde_json::from_slice(&std::fs::read(path)?)?;
        let expected = layout(model.input_dim, model.hidden_dim, model.n_depots).total;
        if model.params.len() != expected {
            return Err(crate::Error::InvalidInput(format!(
                "checkpoint has {} parameters, shape manifest implies {expected}",
                model.params.len()
            )));
        }
        model.adam = AdamState::new(expected);
        Ok(model)
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits
        .iter()
        .map(|&z| (z - max).exp())
        .sum::<f64>()
        .ln()
        + max;
    logits.iter().map(|&z| z - log_sum).collect()
}

/// Lowest-index argmax.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Default for AdamState {
    fn default() -> Self {
        AdamState::new(0)
    }
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        if self.m.len() != params.len() {
            self.m = vec![0.0; params.len()];
            self.v = vec![0.0; params.len()];
            self.t = 0;
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}
