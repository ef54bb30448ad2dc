//! Warm start, assignment proposal, reward shaping and the training loop.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use super::net::{argmax, log_softmax, softmax, AdamState, PolicyModel};
use super::ppo::{ppo_update, PpoConfig};
use super::{DecisionRecord, EpisodeBatch};
use crate::assign::{
    encode_features, nearest_depot_assignment, Assignment, FeatureScaling, SegmentFeatures,
};
use crate::fleet::FleetSpec;
use crate::network::RoadNetwork;
use crate::routing::{check_feasibility, depot_overrun_fraction, solve_assignment, Plan, Selection};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct WarmStartConfig {
    /// Stop once greedy agreement with the labels reaches this fraction.
    pub target_agreement: f64,
    pub max_epochs: usize,
    pub learning_rate: f64,
}

impl Default for WarmStartConfig {
    fn default() -> Self {
        WarmStartConfig {
            target_agreement: 0.95,
            max_epochs: 200,
            learning_rate: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarmStartReport {
    pub epochs: usize,
    pub agreement: f64,
    /// False when agreement stayed below 0.8; a diagnostic, not a failure.
    pub converged: bool,
}

/// Supervised cross-entropy fit of the policy head to imitation labels
/// (depot indices per segment, same order as `features`).
pub fn warm_start(
    model: &mut PolicyModel,
    features: &[SegmentFeatures],
    labels: &[usize],
    cfg: &WarmStartConfig,
) -> WarmStartReport {
    assert_eq!(features.len(), labels.len());
    let n = features.len();
    if n == 0 {
        return WarmStartReport {
            epochs: 0,
            agreement: 1.0,
            converged: true,
        };
    }

    let agreement = |m: &PolicyModel| -> f64 {
        let hits = features
            .iter()
            .zip(labels)
            .filter(|(f, &l)| argmax(&m.forward(&f.values).logits) == l)
            .count();
        hits as f64 / n as f64
    };

    let mut adam = AdamState::new(model.param_count());
    let mut epochs = 0;
    let mut agree = agreement(model);
    while agree < cfg.target_agreement && epochs < cfg.max_epochs {
        let mut grad = vec![0.0; model.param_count()];
        for (f, &label) in features.iter().zip(labels) {
            let cache = model.forward(&f.values);
            let probs = softmax(&cache.logits);
            let mut dlogits = probs;
            dlogits[label] -= 1.0;
            for d in &mut dlogits {
                *d /= n as f64;
            }
            model.backward(&cache, &dlogits, 0.0, &mut grad);
        }
        let mut params = model.params().to_vec();
        adam.step(&mut params, &grad, cfg.learning_rate);
        for (i, v) in params.into_iter().enumerate() {
            model.set_param(i, v);
        }
        epochs += 1;
        agree = agreement(model);
    }
    // PPO starts with fresh optimizer moments.
    model.adam = AdamState::new(model.param_count());
    WarmStartReport {
        epochs,
        agreement: agree,
        converged: agree >= 0.8,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalMode {
    Sample,
    Greedy,
}

/// Draws (or argmaxes) one depot index per segment, recording sampling-time
/// log-probs and value estimates for the later PPO update.
pub fn propose_actions(
    model: &PolicyModel,
    features: &[SegmentFeatures],
    mode: ProposalMode,
    rng: &mut impl Rng,
    iteration: usize,
) -> EpisodeBatch {
    let mut records = Vec::with_capacity(features.len());
    for f in features {
        let cache = model.forward(&f.values);
        let probs = softmax(&cache.logits);
        let logp = log_softmax(&cache.logits);
        let action = match mode {
            ProposalMode::Greedy => argmax(&cache.logits),
            ProposalMode::Sample => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = probs.len() - 1;
                for (d, &p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        chosen = d;
                        break;
                    }
                }
                chosen
            }
        };
        records.push(DecisionRecord {
            edge: f.edge,
            features: f.values.clone(),
            action,
            log_prob: logp[action],
            value: cache.value,
        });
    }
    EpisodeBatch {
        records,
        reward: 0.0,
        iteration,
    }
}

/// Maps per-segment depot indices onto an [`Assignment`] using the fleet's
/// id-sorted depot order.
pub fn batch_to_assignment(batch: &EpisodeBatch, fleet: &FleetSpec) -> Assignment {
    let mut mapping = BTreeMap::new();
    for rec in &batch.records {
        mapping.insert(rec.edge, fleet.depots[rec.action].id);
    }
    Assignment::new(mapping)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub w1: f64,
    pub w2: f64,
    pub penalty_weight: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            w1: 1.0,
            w2: 1.0,
            penalty_weight: 1.0,
        }
    }
}

fn normalized(value: f64, baseline: f64) -> f64 {
    if baseline > 0.0 {
        value / baseline
    } else {
        value
    }
}

/// Scalarized plan objective: `w1*Z1/Z1_base + w2*Z2/Z2_base` plus the
/// weighted soft depot-capacity overrun. Lower is better.
pub fn plan_objective(
    z1: f64,
    z2: f64,
    overrun_fraction: f64,
    baseline: (f64, f64),
    w: &RewardWeights,
) -> f64 {
    w.w1 * normalized(z1, baseline.0)
        + w.w2 * normalized(z2, baseline.1)
        + w.penalty_weight * overrun_fraction
}

/// Episode reward: the negated objective, so the baseline plan scores
/// `-(w1 + w2)` when it has no soft violations.
pub fn compute_reward(plan: &Plan, baseline: (f64, f64), w: &RewardWeights) -> f64 {
    let overrun = depot_overrun_fraction(&plan.violations);
    -plan_objective(plan.z1_minutes, plan.z2_kg, overrun, baseline, w)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub z1_minutes: f64,
    pub z2_kg: f64,
    pub vehicles: u32,
    pub reward: f64,
    pub best_so_far: f64,
    pub failed: bool,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub iterations: usize,
    pub seed: u64,
    pub weights: RewardWeights,
    pub selection: Selection,
    pub hidden_dim: usize,
    pub warm_start: WarmStartConfig,
    pub ppo: PpoConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 10,
            seed: 0,
            weights: RewardWeights::default(),
            selection: Selection::default(),
            hidden_dim: 64,
            warm_start: WarmStartConfig::default(),
            ppo: PpoConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best_assignment: Assignment,
    pub best_plan: Plan,
    pub best_objective: f64,
    /// (Z1, Z2) of the iteration-0 baseline used for normalization.
    pub baseline: (f64, f64),
    pub log: Vec<IterationRecord>,
    pub model: Option<PolicyModel>,
    pub warm_start: Option<WarmStartReport>,
    pub scaling: FeatureScaling,
}

/// Full closed-loop training: iteration 0 evaluates the nearest-depot
/// baseline, then each iteration samples a policy assignment, solves the
/// lower level, computes the reward and applies a PPO update. The
/// best-so-far assignment/plan by scalarized objective is returned;
/// unroutable proposed assignments mark the iteration failed with a large
/// negative reward and training continues.
pub fn train_loop(
    network: &RoadNetwork,
    fleet: &FleetSpec,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (features, scaling) = encode_features(network, &fleet.depots);

    let baseline_assignment = nearest_depot_assignment(network, &fleet.depots)?;
    let baseline_plan = solve_assignment(network, &baseline_assignment, fleet, cfg.selection)?;
    let baseline = (baseline_plan.z1_minutes, baseline_plan.z2_kg);
    let baseline_reward = compute_reward(&baseline_plan, baseline, &cfg.weights);
    let baseline_objective = -baseline_reward;

    let mut log = vec![IterationRecord {
        iter: 0,
        z1_minutes: baseline_plan.z1_minutes,
        z2_kg: baseline_plan.z2_kg,
        vehicles: baseline_plan.vehicles_used(),
        reward: baseline_reward,
        best_so_far: baseline_objective,
        failed: false,
    }];

    let mut best_assignment = baseline_assignment.clone();
    let mut best_plan = baseline_plan;
    let mut best_objective = baseline_objective;

    if cfg.iterations == 0 || features.is_empty() {
        return Ok(TrainOutcome {
            best_assignment,
            best_plan,
            best_objective,
            baseline,
            log,
            model: None,
            warm_start: None,
            scaling,
        });
    }

    let input_dim = features[0].values.len();
    let mut model = PolicyModel::new(input_dim, cfg.hidden_dim, fleet.depots.len(), &mut rng);

    let depot_index: BTreeMap<_, _> = fleet
        .depots
        .iter()
        .enumerate()
        .map(|(i, d)| (d.id, i))
        .collect();
    let labels: Vec<usize> = features
        .iter()
        .map(|f| depot_index[&baseline_assignment.depot_of(f.edge).unwrap()])
        .collect();
    let ws_report = warm_start(&mut model, &features, &labels, &cfg.warm_start);

    let failure_reward = -10.0 * (cfg.weights.w1 + cfg.weights.w2).max(1.0);

    for iter in 1..=cfg.iterations {
        let mut batch = propose_actions(&model, &features, ProposalMode::Sample, &mut rng, iter);
        let assignment = batch_to_assignment(&batch, fleet);
        let mut failed = false;
        let (z1, z2, vehicles, reward) =
            match solve_assignment(network, &assignment, fleet, cfg.selection) {
                Ok(plan) => {
                    let reward = compute_reward(&plan, baseline, &cfg.weights);
                    let objective = -reward;
                    let stats = (plan.z1_minutes, plan.z2_kg, plan.vehicles_used(), reward);
                    if objective < best_objective {
                        best_objective = objective;
                        best_assignment = assignment;
                        best_plan = plan;
                    }
                    stats
                }
                Err(Error::UnroutableEdge { .. }) | Err(Error::Unreachable { .. }) => {
                    failed = true;
                    (f64::NAN, f64::NAN, 0, failure_reward)
                }
                Err(e) => return Err(e),
            };
        batch.reward = reward;
        ppo_update(&mut model, &[batch], &cfg.ppo, &mut rng);
        log.push(IterationRecord {
            iter,
            z1_minutes: z1,
            z2_kg: z2,
            vehicles,
            reward,
            best_so_far: best_objective,
            failed,
        });
    }

    Ok(TrainOutcome {
        best_assignment,
        best_plan,
        best_objective,
        baseline,
        log,
        model: Some(model),
        warm_start: Some(ws_report),
        scaling,
    })
}

/// Re-derives a plan's checker output; convenience for artifact validation.
pub fn recheck(plan: &Plan, assignment: &Assignment, network: &RoadNetwork, fleet: &FleetSpec) -> usize {
    check_feasibility(plan, assignment, network, fleet)
        .iter()
        .filter(|v| v.hard)
        .count()
}
