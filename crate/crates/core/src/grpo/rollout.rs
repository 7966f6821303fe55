use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::batch::{GrpoBatch, TokenRecord, Trajectory};
use super::policy::ToyPolicy;
use super::toy::{token_records, ToyReasoner};
use super::GrpoError;
use crate::eval::canonicalize_answer;
use crate::item::McqItem;
use crate::protocol::{render_reasoner_prompt, run_episode, DialogueBudget, Episode, Reasoner};
use crate::sensor::Sensor;
use crate::util::{derive_seed, seeded_rng};

/// 1 when the canonicalized prediction is the gold option, else 0.
pub fn terminal_reward(episode: &Episode, item: &McqItem) -> f64 {
    let predicted = episode.prediction_text().and_then(|t| canonicalize_answer(t, &item.options, None));
    if predicted == Some(item.gold_index) {
        1.0
    } else {
        0.0
    }
}

/// (R_j − mean) / (population std + adv_eps).
pub fn group_advantages(rewards: &[f64], adv_eps: f64) -> Vec<f64> {
    if rewards.is_empty() {
        return Vec::new();
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var);
    rewards.iter().map(|r| (r - mean) / (std + adv_eps)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub prompt_id: String,
    pub episodes: Vec<Episode>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
    /// Per-episode token records; empty for reasoners without log-probs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<Vec<TokenRecord>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutSettings {
    pub group_size: usize,
    pub adv_eps: f64,
    pub budget: DialogueBudget,
    pub seed: u64,
}

fn episode_seed(settings: &RolloutSettings, prompt_id: &str, j: usize) -> u64 {
    derive_seed(settings.seed, prompt_id, j as u64)
}

/// Samples `group_size` episodes of any reasoner per item. Transport
/// failures propagate.
pub fn collect_groups(
    reasoner: &dyn Reasoner,
    items: &[&McqItem],
    sensor: &dyn Sensor,
    settings: &RolloutSettings,
) -> Result<Vec<RolloutGroup>, GrpoError> {
    if settings.group_size < 2 {
        return Err(GrpoError::GroupTooSmall(settings.group_size));
    }
    let mut groups = Vec::with_capacity(items.len());
    for item in items {
        let mut episodes = Vec::with_capacity(settings.group_size);
        for j in 0..settings.group_size {
            let mut rng = seeded_rng(episode_seed(settings, &item.id, j));
            episodes.push(run_episode(item, reasoner, sensor, &settings.budget, &mut rng)?);
        }
        let rewards: Vec<f64> = episodes.iter().map(|e| terminal_reward(e, item)).collect();
        let advantages = group_advantages(&rewards, settings.adv_eps);
        groups.push(RolloutGroup { prompt_id: item.id.clone(), episodes, rewards, advantages, records: Vec::new() });
    }
    Ok(groups)
}

/// Toy-policy rollouts with old and reference log-probs frozen at sampling.
pub fn collect_rollouts(
    policy: &ToyPolicy,
    reference: &ToyPolicy,
    items: &[&McqItem],
    sensor: &dyn Sensor,
    settings: &RolloutSettings,
) -> Result<Vec<RolloutGroup>, GrpoError> {
    let mut groups = collect_groups(&ToyReasoner { policy }, items, sensor, settings)?;
    for (group, item) in groups.iter_mut().zip(items) {
        for (j, ep) in group.episodes.iter().enumerate() {
            let id = format!("{}#{j}", group.prompt_id);
            group.records.push(token_records(&id, item, &ep.steps, policy, reference)?);
        }
    }
    Ok(groups)
}

/// Flattens groups into a batch. `items` supplies transcripts when given.
pub fn build_batch(groups: &[RolloutGroup], items: Option<&[&McqItem]>, clip_eps: f64, beta: f64) -> GrpoBatch {
    let mut trajectories = Vec::new();
    for (g, group) in groups.iter().enumerate() {
        for (j, tokens) in group.records.iter().enumerate() {
            let transcript = items
                .and_then(|items| items.get(g))
                .map(|item| render_reasoner_prompt(item, &group.episodes[j].steps))
                .unwrap_or_default();
            trajectories.push(Trajectory {
                id: format!("{}#{j}", group.prompt_id),
                prompt_id: group.prompt_id.clone(),
                reward: group.rewards[j],
                advantage: group.advantages[j],
                tokens: tokens.clone(),
                transcript,
            });
        }
    }
    GrpoBatch { trajectories, clip_eps, beta }
}
