//! The GRPO objective as a function of toy-policy parameters, with its exact
//! gradient and a finite-difference reference.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use serde::{Deserialize, Serialize};

use super::batch::{clipped_term, k3, unclipped_active, GrpoBatch};
use super::policy::{Params, ToyPolicy};
use super::GrpoError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlEstimator {
    /// Sampled k3 estimator on the emitted symbol.
    #[default]
    K3,
    /// Exact categorical KL over the whole context row.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub actor: f64,
    pub kl: f64,
    /// actor − β·kl.
    pub objective: f64,
}

fn add_scaled(grad: &mut Params, context: &str, n: usize, f: impl Fn(usize) -> f64) {
    let row = grad.entry(String::from(context)).or_insert_with(|| vec![0.0; n]);
    for (b, g) in row.iter_mut().enumerate() {
        *g += f(b);
    }
}

/// Evaluates actor − β·KL at `policy` (current log-probs are recomputed; old
/// and, for k3, reference log-probs come from the records) and its gradient
/// with respect to every context row the batch touches.
///
/// Inside a clipped region the gradient is zero.
pub fn grpo_objective(
    policy: &ToyPolicy,
    reference: &ToyPolicy,
    batch: &GrpoBatch,
    estimator: KlEstimator,
) -> Result<(ObjectiveValue, Params), GrpoError> {
    batch.validate()?;
    let n = policy.size();
    let temp = policy.temperature;
    let mut grad = Params::new();
    let (mut actor, mut kl) = (0.0, 0.0);
    let trajectories = batch.trajectories.len();
    for t in &batch.trajectories {
        let w = 1.0 / (trajectories as f64 * t.masked_count() as f64);
        for tok in t.masked() {
            let a = policy
                .symbol_index(&tok.symbol)
                .ok_or_else(|| GrpoError::UnknownSymbol { trajectory: t.id.clone(), raw: tok.symbol.clone() })?;
            let log_probs = policy.log_probs(&tok.context_id);
            let probs: alloc::vec::Vec<f64> = log_probs.iter().map(|l| libm::exp(*l)).collect();
            let lc = log_probs[a];
            // ∂ log π_a / ∂θ_b = (1[b=a] − π_b) / T
            let dlogp = |b: usize| (f64::from(u8::from(b == a)) - probs[b]) / temp;

            let rho = libm::exp(lc - tok.logp_old);
            actor += w * clipped_term(rho, t.advantage, batch.clip_eps);
            if t.advantage != 0.0 && unclipped_active(rho, t.advantage, batch.clip_eps) {
                let scale = w * t.advantage * rho;
                add_scaled(&mut grad, &tok.context_id, n, |b| scale * dlogp(b));
            }

            match estimator {
                KlEstimator::K3 => {
                    let delta = tok.logp_ref - lc;
                    kl += w * k3(delta);
                    // d k3 / d lc = 1 − e^δ
                    let scale = -batch.beta * w * (-libm::expm1(delta));
                    if scale != 0.0 {
                        add_scaled(&mut grad, &tok.context_id, n, |b| scale * dlogp(b));
                    }
                }
                KlEstimator::Exact => {
                    let ref_lp = reference.log_probs(&tok.context_id);
                    let diff: alloc::vec::Vec<f64> = log_probs.iter().zip(&ref_lp).map(|(p, r)| p - r).collect();
                    let row_kl: f64 = probs.iter().zip(&diff).map(|(p, d)| p * d).sum();
                    kl += w * row_kl;
                    // ∂ KL / ∂θ_c = π_c (d_c − KL) / T
                    let scale = -batch.beta * w;
                    add_scaled(&mut grad, &tok.context_id, n, |c| scale * probs[c] * (diff[c] - row_kl) / temp);
                }
            }
        }
    }
    Ok((ObjectiveValue { actor, kl, objective: actor - batch.beta * kl }, grad))
}

/// Central differences of the objective with step `h` over every row the
/// batch touches.
pub fn finite_difference_grad(
    policy: &ToyPolicy,
    reference: &ToyPolicy,
    batch: &GrpoBatch,
    estimator: KlEstimator,
    h: f64,
) -> Result<Params, GrpoError> {
    let contexts: BTreeSet<&str> =
        batch.trajectories.iter().flat_map(|t| t.masked().map(|tok| tok.context_id.as_str())).collect();
    let mut probe = policy.clone();
    let mut grad = Params::new();
    for ctx in contexts {
        let mut row = vec![0.0; policy.size()];
        for (b, g) in row.iter_mut().enumerate() {
            let base = probe.row_mut(ctx)[b];
            probe.row_mut(ctx)[b] = base + h;
            let up = grpo_objective(&probe, reference, batch, estimator)?.0.objective;
            probe.row_mut(ctx)[b] = base - h;
            let down = grpo_objective(&probe, reference, batch, estimator)?.0.objective;
            probe.row_mut(ctx)[b] = base;
            *g = (up - down) / (2.0 * h);
        }
        grad.insert(String::from(ctx), row);
    }
    Ok(grad)
}

/// Smallest distance of any masked ratio from a clip boundary.
pub fn clip_margin(policy: &ToyPolicy, batch: &GrpoBatch) -> f64 {
    let mut margin = f64::INFINITY;
    for t in &batch.trajectories {
        for tok in t.masked() {
            if let Some(a) = policy.symbol_index(&tok.symbol) {
                let rho = libm::exp(policy.log_prob(&tok.context_id, a) - tok.logp_old);
                margin = margin.min((rho - (1.0 - batch.clip_eps)).abs()).min((rho - (1.0 + batch.clip_eps)).abs());
            }
        }
    }
    margin
}

/// Normwise relative error: max |a − b| over max |a|, |b| (entries of rows
/// missing on one side count as zeros).
pub fn max_relative_error(a: &Params, b: &Params) -> f64 {
    let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    let (mut diff, mut scale): (f64, f64) = (0.0, 0.0);
    for k in keys {
        let n = a.get(k).or(b.get(k)).map_or(0, |r| r.len());
        for i in 0..n {
            let x = a.get(k).map_or(0.0, |r| r[i]);
            let y = b.get(k).map_or(0.0, |r| r[i]);
            diff = diff.max((x - y).abs());
            scale = scale.max(x.abs()).max(y.abs());
        }
    }
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
