use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::GrpoError;
use crate::protocol::Message;

/// One emitted symbol. Reasoner symbols are masked (trained on); sensor text is
/// recorded for completeness but never masked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub trajectory_id: String,
    pub context_id: String,
    pub symbol: String,
    /// 0-based dialogue step that produced the symbol.
    pub turn: usize,
    pub logp_current: f64,
    pub logp_old: f64,
    pub logp_ref: f64,
    pub masked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub id: String,
    pub prompt_id: String,
    pub reward: f64,
    /// Constant over every token of the trajectory.
    pub advantage: f64,
    pub tokens: Vec<TokenRecord>,
    /// Rendered dialogue, for trainers that re-tokenize.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transcript: Vec<Message>,
}

impl Trajectory {
    pub fn masked(&self) -> impl Iterator<Item = &TokenRecord> {
        self.tokens.iter().filter(|t| t.masked)
    }

    pub fn masked_count(&self) -> usize {
        self.masked().count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrpoBatch {
    pub trajectories: Vec<Trajectory>,
    pub clip_eps: f64,
    pub beta: f64,
}

impl GrpoBatch {
    pub fn validate(&self) -> Result<(), GrpoError> {
        for t in &self.trajectories {
            if t.masked_count() == 0 {
                return Err(GrpoError::EmptyTrajectory(t.id.clone()));
            }
            for (index, tok) in t.tokens.iter().enumerate() {
                let finite = tok.logp_current.is_finite() && tok.logp_old.is_finite() && tok.logp_ref.is_finite();
                if tok.masked && !finite {
                    return Err(GrpoError::NonFiniteLogProb { trajectory: t.id.clone(), index });
                }
            }
        }
        Ok(())
    }
}

/// min(ρA, clip(ρ, 1−ε, 1+ε)A).
pub fn clipped_term(rho: f64, advantage: f64, clip_eps: f64) -> f64 {
    let clipped = rho.clamp(1.0 - clip_eps, 1.0 + clip_eps);
    f64::min(rho * advantage, clipped * advantage)
}

/// Whether the unclipped branch is the minimum, so the term depends on ρ.
pub fn unclipped_active(rho: f64, advantage: f64, clip_eps: f64) -> bool {
    let clipped = rho.clamp(1.0 - clip_eps, 1.0 + clip_eps);
    rho * advantage <= clipped * advantage
}

/// exp(δ) − δ − 1: nonnegative, zero only at δ = 0.
pub fn k3(delta: f64) -> f64 {
    libm::expm1(delta) - delta
}

/// Token-mean within each trajectory, plain mean over trajectories.
fn trajectory_mean(batch: &GrpoBatch, per_token: impl Fn(&TokenRecord, &Trajectory) -> f64) -> Result<f64, GrpoError> {
    batch.validate()?;
    if batch.trajectories.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for t in &batch.trajectories {
        let sum: f64 = t.masked().map(|tok| per_token(tok, t)).sum();
        total += sum / t.masked_count() as f64;
    }
    Ok(total / batch.trajectories.len() as f64)
}

/// Clipped token-mean surrogate evaluated at the stored current log-probs.
pub fn actor_surrogate(batch: &GrpoBatch) -> Result<f64, GrpoError> {
    trajectory_mean(batch, |tok, t| {
        clipped_term(libm::exp(tok.logp_current - tok.logp_old), t.advantage, batch.clip_eps)
    })
}

/// Token-mean k3 estimate of KL(current ‖ reference).
pub fn kl_penalty(batch: &GrpoBatch) -> Result<f64, GrpoError> {
    trajectory_mean(batch, |tok, _| k3(tok.logp_ref - tok.logp_current))
}
