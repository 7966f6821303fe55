//! Random toy instances for checking the objective's gradient and the
//! multi-turn/single-step equivalence.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng;

use super::batch::{GrpoBatch, TokenRecord, Trajectory};
use super::objective::{clip_margin, finite_difference_grad, grpo_objective, max_relative_error, KlEstimator};
use super::policy::ToyPolicy;
use super::rollout::{build_batch, collect_rollouts, group_advantages, RolloutSettings};
use super::toy::toy_policy;
use super::GrpoError;
use crate::item::McqItem;
use crate::protocol::DialogueBudget;
use crate::sensor::SensorConfig;
use crate::util::{derive_seed, seeded_rng};
use crate::world::{generate_suite, GenerationSpec, OracleSensor};

/// A batch sampled from `old`, evaluated at a perturbed `policy`.
#[derive(Debug, Clone)]
pub struct ToyInstance {
    pub policy: ToyPolicy,
    pub reference: ToyPolicy,
    pub batch: GrpoBatch,
}

fn randomize(policy: &mut ToyPolicy, contexts: &[String], scale: f64, rng: &mut impl Rng) {
    for ctx in contexts {
        for v in policy.row_mut(ctx).iter_mut() {
            *v += scale * (rng.random::<f64>() * 2.0 - 1.0);
        }
    }
}

/// Samples rollouts from a random policy in a small world, then moves the
/// policy so that some ratios leave the clip interval.
pub fn random_toy_instance(seed: u64) -> Result<ToyInstance, GrpoError> {
    let mut rng = seeded_rng(derive_seed(seed, "instance", 0));
    let tasks = generate_suite(seed, 3, &GenerationSpec::default()).map_err(|e| GrpoError::InvalidConfig(format!("{e}")))?;
    let sensor = OracleSensor::from_tasks(&tasks, SensorConfig::default());
    let items: Vec<&McqItem> = tasks.iter().map(|t| &t.item).collect();

    let mut old = toy_policy(0.7 + rng.random::<f64>());
    let mut reference = old.clone();
    let settings = RolloutSettings { group_size: 4, adv_eps: 1e-6, budget: DialogueBudget { max_steps: 6, max_malformed: 3 }, seed };
    // Rows only exist once touched, so randomize after a first pass reveals
    // the contexts, then sample again.
    let first = collect_rollouts(&old, &reference, &items, &sensor, &settings)?;
    let contexts: Vec<String> =
        first.iter().flat_map(|g| g.records.iter().flatten()).filter(|r| r.masked).map(|r| r.context_id.clone()).collect();
    randomize(&mut old, &contexts, 1.0, &mut rng);
    randomize(&mut reference, &contexts, 1.0, &mut rng);
    let groups = collect_rollouts(&old, &reference, &items, &sensor, &settings)?;
    let mut batch = build_batch(&groups, None, 0.2, rng.random_range(0.0..0.5));

    let touched: Vec<String> =
        batch.trajectories.iter().flat_map(|t| t.masked().map(|r| r.context_id.clone())).collect();
    let mut policy = old;
    randomize(&mut policy, &touched, 0.4, &mut rng);
    batch.trajectories.retain(|t| t.masked_count() > 0);
    Ok(ToyInstance { policy, reference, batch })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub relative_error: f64,
    pub clip_margin: f64,
}

/// Analytic gradient against central differences with step `h`.
pub fn gradient_check(instance: &ToyInstance, estimator: KlEstimator, h: f64) -> Result<GradientCheck, GrpoError> {
    let (_, analytic) = grpo_objective(&instance.policy, &instance.reference, &instance.batch, estimator)?;
    let numeric = finite_difference_grad(&instance.policy, &instance.reference, &instance.batch, estimator, h)?;
    Ok(GradientCheck {
        relative_error: max_relative_error(&analytic, &numeric),
        clip_margin: clip_margin(&instance.policy, &instance.batch),
    })
}

/// A synthetic multi-turn batch with terminal rewards: `groups` prompts of
/// `group_size` trajectories, each with 1..=`max_turns` turns and one or more
/// masked tokens per turn interleaved with unmasked sensor tokens.
pub fn random_multi_turn_batch(seed: u64, groups: usize, group_size: usize, max_turns: usize, adv_eps: f64) -> GrpoBatch {
    let mut rng = seeded_rng(derive_seed(seed, "multi-turn", 0));
    let mut trajectories = Vec::new();
    let lp = |rng: &mut rand_chacha::ChaCha8Rng| -3.0 * rng.random::<f64>();
    for g in 0..groups {
        let prompt_id = format!("p{g}");
        let rewards: Vec<f64> = (0..group_size).map(|_| f64::from(u8::from(rng.random_bool(0.5)))).collect();
        let advantages = group_advantages(&rewards, adv_eps);
        for j in 0..group_size {
            let id = format!("{prompt_id}#{j}");
            let turns = rng.random_range(1..=max_turns.max(1));
            let mut tokens = Vec::new();
            for turn in 0..turns {
                for k in 0..rng.random_range(1..=3) {
                    let logp_old = lp(&mut rng);
                    tokens.push(TokenRecord {
                        trajectory_id: id.clone(),
                        context_id: format!("c{turn}.{k}"),
                        symbol: format!("s{k}"),
                        turn,
                        logp_current: logp_old + 0.6 * (rng.random::<f64>() - 0.5),
                        logp_old,
                        logp_ref: lp(&mut rng),
                        masked: true,
                    });
                }
                if turn + 1 < turns {
                    tokens.push(TokenRecord {
                        trajectory_id: id.clone(),
                        context_id: String::from("sensor"),
                        symbol: String::from("reply"),
                        turn,
                        logp_current: 0.0,
                        logp_old: 0.0,
                        logp_ref: 0.0,
                        masked: false,
                    });
                }
            }
            trajectories.push(Trajectory {
                id,
                prompt_id: prompt_id.clone(),
                reward: rewards[j],
                advantage: advantages[j],
                tokens,
                transcript: Vec::new(),
            });
        }
    }
    GrpoBatch { trajectories, clip_eps: 0.2, beta: rng.random_range(0.0..0.1) }
}
