//! Multi-turn GRPO on a tabular toy policy.
//!
//! Rewards are terminal, advantages are group-relative and constant within a
//! trajectory, the actor term is a clipped token-mean surrogate over
//! reasoner-emitted symbols only, and a per-token KL to a frozen reference is
//! subtracted with weight β.

mod batch;
mod check;
mod equivalence;
mod objective;
mod policy;
mod rollout;
mod toy;
mod train;

pub use batch::{actor_surrogate, clipped_term, k3, kl_penalty, unclipped_active, GrpoBatch, TokenRecord, Trajectory};
pub use check::{gradient_check, random_multi_turn_batch, random_toy_instance, GradientCheck, ToyInstance};
pub use equivalence::{check_single_step_equivalence, multi_turn_objective, single_step_objective};
pub use objective::{clip_margin, finite_difference_grad, grpo_objective, max_relative_error, KlEstimator, ObjectiveValue};
pub use policy::{log_softmax, Params, ToyPolicy};
pub use rollout::{
    build_batch, collect_groups, collect_rollouts, group_advantages, terminal_reward, RolloutGroup, RolloutSettings,
};
pub use toy::{context_key, render_symbol, token_records, toy_policy, toy_vocabulary, ToyReasoner};
pub use train::{format_metrics, train_toy, StepMetrics, TrainConfig, TrainReport};

use alloc::string::String;

use crate::protocol::EpisodeError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GrpoError {
    #[error("non-finite log-probability in trajectory `{trajectory}` at token {index}")]
    NonFiniteLogProb { trajectory: String, index: usize },
    #[error("trajectory `{0}` has no masked symbols")]
    EmptyTrajectory(String),
    #[error("group size must be at least 2, got {0}")]
    GroupTooSmall(usize),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("trajectory `{trajectory}` contains output outside the policy vocabulary: {raw:?}")]
    UnknownSymbol { trajectory: String, raw: String },
    #[error(transparent)]
    Episode(#[from] EpisodeError),
}
