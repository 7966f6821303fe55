use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::batch::kl_penalty;
use super::objective::{grpo_objective, KlEstimator};
use super::policy::ToyPolicy;
use super::rollout::{build_batch, collect_rollouts, RolloutSettings};
use super::toy::toy_policy;
use super::GrpoError;
use crate::item::McqItem;
use crate::protocol::DialogueBudget;
use crate::sensor::SensorConfig;
use crate::util::{derive_seed, seeded_rng};
use crate::world::{OracleSensor, TaskInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub group_size: usize,
    pub prompts_per_step: usize,
    pub steps: usize,
    pub clip_eps: f64,
    pub beta: f64,
    pub adv_eps: f64,
    pub learning_rate: f64,
    pub rng_seed: u64,
    /// Sampling temperature of the toy policy.
    pub temperature: f64,
    /// Gradient steps per collected batch, each against the same old policy.
    pub updates_per_batch: usize,
    pub kl_estimator: KlEstimator,
    pub budget: DialogueBudget,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            group_size: 8,
            prompts_per_step: 64,
            steps: 60,
            clip_eps: 0.2,
            beta: 1e-3,
            adv_eps: 1e-6,
            learning_rate: 10.0,
            rng_seed: 0,
            temperature: 1.0,
            updates_per_batch: 1,
            kl_estimator: KlEstimator::K3,
            budget: DialogueBudget::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), GrpoError> {
        let bad = |m: &str| Err(GrpoError::InvalidConfig(m.to_string()));
        if self.group_size < 2 {
            return Err(GrpoError::GroupTooSmall(self.group_size));
        }
        if self.clip_eps.is_nan() || self.clip_eps <= 0.0 {
            return bad("clip_eps must be positive");
        }
        if self.beta.is_nan() || self.beta < 0.0 {
            return bad("beta must be nonnegative");
        }
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return bad("temperature must be positive");
        }
        if self.prompts_per_step == 0 || self.updates_per_batch == 0 {
            return bad("prompts_per_step and updates_per_batch must be at least 1");
        }
        if !self.learning_rate.is_finite() || !self.adv_eps.is_finite() || self.adv_eps < 0.0 {
            return bad("learning_rate and adv_eps must be finite, adv_eps nonnegative");
        }
        Ok(())
    }

    /// Total parameter updates a run performs.
    pub fn updates(&self) -> usize {
        self.steps * self.updates_per_batch
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: usize,
    pub mean_reward: f64,
    /// k3 estimate against the reference at sampling time.
    pub kl: f64,
    pub rejection_rate: f64,
    pub mean_rounds: f64,
    /// Objective before the first update of the step.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub bottleneck_on: bool,
    pub config: TrainConfig,
    pub metrics: Vec<StepMetrics>,
    pub policy: ToyPolicy,
}

impl TrainReport {
    /// Mean reward over the first and last `window` steps.
    pub fn reward_trend(&self, window: usize) -> (f64, f64) {
        let w = window.clamp(1, self.metrics.len().max(1));
        let mean = |m: &[StepMetrics]| {
            if m.is_empty() {
                0.0
            } else {
                m.iter().map(|s| s.mean_reward).sum::<f64>() / m.len() as f64
            }
        };
        let n = self.metrics.len();
        (mean(&self.metrics[..w.min(n)]), mean(&self.metrics[n.saturating_sub(w)..]))
    }
}

/// Runs toy GRPO against the oracle sensor over `world`. `bottleneck_on`
/// selects whether the sensor enforces its rejection policy. The reference
/// policy is the initial (uniform) policy.
pub fn train_toy(config: &TrainConfig, world: &[TaskInstance], bottleneck_on: bool) -> Result<TrainReport, GrpoError> {
    config.validate()?;
    if world.is_empty() {
        return Err(GrpoError::InvalidConfig("the task world is empty".to_string()));
    }
    let sensor_config = if bottleneck_on { SensorConfig::default() } else { SensorConfig::without_rejection() };
    let sensor = OracleSensor::from_tasks(world, sensor_config);
    let reference = toy_policy(config.temperature);
    let mut policy = reference.clone();
    let mut metrics = Vec::with_capacity(config.steps);

    for step in 0..config.steps {
        let mut pick = seeded_rng(derive_seed(config.rng_seed, "prompts", step as u64));
        let items: Vec<&McqItem> =
            (0..config.prompts_per_step).map(|_| &world[pick.random_range(0..world.len())].item).collect();
        let settings = RolloutSettings {
            group_size: config.group_size,
            adv_eps: config.adv_eps,
            budget: config.budget,
            seed: derive_seed(config.rng_seed, "rollouts", step as u64),
        };
        let old = policy.clone();
        let groups = collect_rollouts(&old, &reference, &items, &sensor, &settings)?;
        let batch = build_batch(&groups, None, config.clip_eps, config.beta);

        let episodes = groups.iter().flat_map(|g| &g.episodes);
        let (mut count, mut rounds, mut rejections) = (0usize, 0usize, 0usize);
        for ep in episodes {
            count += 1;
            rounds += ep.rounds;
            rejections += ep.rejections;
        }
        let rewards: f64 = groups.iter().flat_map(|g| &g.rewards).sum();

        let mut objective = f64::NAN;
        for update in 0..config.updates_per_batch {
            let (value, grad) = grpo_objective(&policy, &reference, &batch, config.kl_estimator)?;
            if update == 0 {
                objective = value.objective;
            }
            policy.ascend(&grad, config.learning_rate);
        }
        metrics.push(StepMetrics {
            step,
            mean_reward: rewards / count.max(1) as f64,
            kl: kl_penalty(&batch)?,
            rejection_rate: if rounds == 0 { 0.0 } else { rejections as f64 / rounds as f64 },
            mean_rounds: rounds as f64 / count.max(1) as f64,
            objective,
        });
    }
    Ok(TrainReport { bottleneck_on, config: config.clone(), metrics, policy })
}

/// One line per step, for logs.
pub fn format_metrics(m: &StepMetrics) -> String {
    format!(
        "step {:>4}  reward {:.4}  kl {:.6}  rej {:.4}  rounds {:.3}  obj {:.6}",
        m.step, m.mean_reward, m.kl, m.rejection_rate, m.mean_rounds, m.objective
    )
}
