//! Clipped-surrogate policy optimization.
//!
//! Loss per minibatch:
//!   `L = -mean(min(r*A, clamp(r, 1-eps, 1+eps)*A))
//!        + value_coef * mean((V - R)^2) - entropy_coef * mean(H)`
//! with `r` the probability ratio against the sampling-time log-prob and
//! `A = R - V_sampled` the advantage frozen at sampling time. Gradients are
//! analytic; `loss_and_grad` is the hook the finite-difference tests call.

use rand::seq::SliceRandom;
use rand::Rng;

use super::net::{log_softmax, softmax, PolicyModel};
use super::EpisodeBatch;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    /// Probability-ratio clip half-width.
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    /// Gradient epochs per update.
    pub epochs: usize,
    pub minibatch: usize,
    pub learning_rate: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            clip: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.01,
            epochs: 4,
            minibatch: 128,
            learning_rate: 3e-4,
        }
    }
}

/// One training sample: frozen observation, action, sampling-time log-prob
/// and the episode return it participated in.
#[derive(Debug, Clone)]
pub struct PpoSample {
    pub features: Vec<f64>,
    pub action: usize,
    pub old_log_prob: f64,
    pub advantage: f64,
    pub return_: f64,
}

pub fn samples_from_batches(batches: &[EpisodeBatch]) -> Vec<PpoSample> {
    let mut samples = Vec::new();
    for batch in batches {
        for rec in &batch.records {
            samples.push(PpoSample {
                features: rec.features.clone(),
                action: rec.action,
                old_log_prob: rec.log_prob,
                advantage: batch.reward - rec.value,
                return_: batch.reward,
            });
        }
    }
    samples
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
}

/// Mean loss over `samples` and its gradient w.r.t. every model parameter.
pub fn loss_and_grad(
    model: &PolicyModel,
    samples: &[PpoSample],
    cfg: &PpoConfig,
) -> (LossParts, Vec<f64>) {
    let n = samples.len() as f64;
    let mut grad = vec![0.0; model.param_count()];
    let mut policy_loss = 0.0;
    let mut value_loss = 0.0;
    let mut entropy_sum = 0.0;

    for s in samples {
        let cache = model.forward(&s.features);
        let probs = softmax(&cache.logits);
        let logp = log_softmax(&cache.logits);
        let lp = logp[s.action];
        let ratio = (lp - s.old_log_prob).exp();

        let clipped = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip);
        let surr1 = ratio * s.advantage;
        let surr2 = clipped * s.advantage;
        policy_loss += -surr1.min(surr2);

        // d(-min)/dratio: the clamp branch only wins when the ratio sits
        // outside the clip interval, where the clamp derivative is zero.
        let dratio = if surr1 <= surr2 { -s.advantage } else { 0.0 };

        let entropy: f64 = -probs
            .iter()
            .zip(&logp)
            .map(|(&p, &l)| if p > 0.0 { p * l } else { 0.0 })
            .sum::<f64>();
        entropy_sum += entropy;

        let verr = cache.value - s.return_;
        value_loss += verr * verr;

        let mut dlogits = vec![0.0; model.n_depots];
        for d in 0..model.n_depots {
            let onehot = if d == s.action { 1.0 } else { 0.0 };
            // policy term: dratio * ratio * (onehot - p_d)
            let mut g = dratio * ratio * (onehot - probs[d]) / n;
            // entropy bonus term: -coef * dH/dz = coef * p_d * (logp_d + H)
            g += cfg.entropy_coef * probs[d] * (logp[d] + entropy) / n;
            dlogits[d] = g;
        }
        let dvalue = cfg.value_coef * 2.0 * verr / n;
        model.backward(&cache, &dlogits, dvalue, &mut grad);
    }

    let parts = LossParts {
        policy: policy_loss / n,
        value: value_loss / n,
        entropy: entropy_sum / n,
        total: policy_loss / n + cfg.value_coef * value_loss / n
            - cfg.entropy_coef * entropy_sum / n,
    };
    (parts, grad)
}

/// Loss only; used by the finite-difference gradient checks.
pub fn loss_only(model: &PolicyModel, samples: &[PpoSample], cfg: &PpoConfig) -> f64 {
    loss_and_grad(model, samples, cfg).0.total
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateReport {
    /// True when a non-finite loss or gradient aborted the update and the
    /// prior parameters were restored.
    pub aborted: bool,
    pub minibatches: usize,
    pub last_loss: Option<LossParts>,
}

/// Runs `epochs` passes of minibatch Adam steps over the batches. On any
/// non-finite loss/gradient the model is rolled back to its state before
/// the update and the report says so.
pub fn ppo_update(
    model: &mut PolicyModel,
    batches: &[EpisodeBatch],
    cfg: &PpoConfig,
    rng: &mut impl Rng,
) -> UpdateReport {
    let samples = samples_from_batches(batches);
    if samples.is_empty() {
        return UpdateReport {
            aborted: false,
            minibatches: 0,
            last_loss: None,
        };
    }
    let snapshot = model.snapshot();
    let mut report = UpdateReport {
        aborted: false,
        minibatches: 0,
        last_loss: None,
    };
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.minibatch.max(1)) {
            let minibatch: Vec<PpoSample> = chunk.iter().map(|&i| samples[i].clone()).collect();
            let (parts, grad) = loss_and_grad(model, &minibatch, cfg);
            if !parts.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                model.restore(snapshot);
                report.aborted = true;
                return report;
            }
            model.adam_step(&grad, cfg.learning_rate);
            report.minibatches += 1;
            report.last_loss = Some(parts);
        }
    }
    report
}
