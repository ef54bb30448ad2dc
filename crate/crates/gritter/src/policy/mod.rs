//! Upper-level depot-assignment policy: categorical head with value
//! baseline, imitation warm start from the nearest-depot labels, and PPO
//! refinement driven by lower-level plan rewards.

mod net;
mod ppo;
mod train;

pub use net::{argmax, log_softmax, softmax, PolicyModel};
pub use ppo::{
    loss_and_grad, loss_only, ppo_update, samples_from_batches, LossParts, PpoConfig, PpoSample,
    UpdateReport,
};
pub use train::{
    batch_to_assignment, compute_reward, plan_objective, propose_actions, recheck, train_loop,
    IterationRecord, ProposalMode, RewardWeights, TrainConfig, TrainOutcome, WarmStartConfig,
    WarmStartReport,
};
pub use train::warm_start;

use crate::network::EdgeId;

/// One segment decision with everything PPO needs later: the observation,
/// the sampled depot index, its log-probability at sampling time and the
/// value estimate.
#[derive(Debug, Clone)]
pub struct DecisionRecord {
    pub edge: EdgeId,
    pub features: Vec<f64>,
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
}

/// All decisions of one proposal episode plus its shared terminal reward.
#[derive(Debug, Clone)]
pub struct EpisodeBatch {
    pub records: Vec<DecisionRecord>,
    pub reward: f64,
    pub iteration: usize,
}

#[cfg(test)]
mod tests;
