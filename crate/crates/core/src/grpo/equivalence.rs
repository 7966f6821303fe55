//! Multi-turn objective with per-turn returns, for checking that it collapses
//! to the single-step objective on concatenated assistant symbols.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::batch::{actor_surrogate, clipped_term, k3, kl_penalty, GrpoBatch};
use super::GrpoError;

/// Evaluates the objective turn by turn. Turn `t` of a trajectory with `T`
/// turns uses the return γ^(T−1−t)·R normalized by its group's reward
/// statistics. With γ = 1 every turn carries the trajectory advantage.
pub fn multi_turn_objective(batch: &GrpoBatch, gamma: f64, adv_eps: f64) -> Result<f64, GrpoError> {
    batch.validate()?;
    if batch.trajectories.is_empty() {
        return Ok(0.0);
    }
    let mut group_rewards: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for t in &batch.trajectories {
        group_rewards.entry(t.prompt_id.as_str()).or_default().push(t.reward);
    }
    let stats: BTreeMap<&str, (f64, f64)> = group_rewards
        .iter()
        .map(|(k, r)| {
            let n = r.len() as f64;
            let mean = r.iter().sum::<f64>() / n;
            let std = libm::sqrt(r.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n);
            (*k, (mean, std))
        })
        .collect();

    let (mut actor, mut kl) = (0.0, 0.0);
    for t in &batch.trajectories {
        let (mean, std) = stats[t.prompt_id.as_str()];
        let mut turns: BTreeMap<usize, Vec<_>> = BTreeMap::new();
        for tok in t.masked() {
            turns.entry(tok.turn).or_default().push(tok);
        }
        let last = turns.keys().next_back().copied().unwrap_or(0);
        let m = t.masked_count() as f64;
        let (mut a_sum, mut k_sum) = (0.0, 0.0);
        for (turn, toks) in &turns {
            let ret = libm::pow(gamma, (last - turn) as f64) * t.reward;
            let advantage = (ret - mean) / (std + adv_eps);
            let mut turn_actor = 0.0;
            let mut turn_kl = 0.0;
            for tok in toks {
                turn_actor += clipped_term(libm::exp(tok.logp_current - tok.logp_old), advantage, batch.clip_eps);
                turn_kl += k3(tok.logp_ref - tok.logp_current);
            }
            a_sum += turn_actor;
            k_sum += turn_kl;
        }
        actor += a_sum / m;
        kl += k_sum / m;
    }
    let n = batch.trajectories.len() as f64;
    Ok(actor / n - batch.beta * (kl / n))
}

/// Single-step objective over each trajectory's concatenated masked symbols.
pub fn single_step_objective(batch: &GrpoBatch) -> Result<f64, GrpoError> {
    Ok(actor_surrogate(batch)? - batch.beta * kl_penalty(batch)?)
}

/// |multi-turn(γ = 1) − single-step| for a batch with terminal rewards.
pub fn check_single_step_equivalence(batch: &GrpoBatch, adv_eps: f64) -> Result<f64, GrpoError> {
    Ok(libm::fabs(multi_turn_objective(batch, 1.0, adv_eps)? - single_step_objective(batch)?))
}
