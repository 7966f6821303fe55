//! Interface capacity of the sensor channel and the generalization bound it
//! implies. All logarithms are natural, so capacities are in nats.

use alloc::collections::BTreeSet;
use alloc::string::String;
use serde::{Deserialize, Serialize};

use crate::protocol::{Action, Episode};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CapacityError {
    #[error("alphabet size must be at least 2, got {0}")]
    InvalidAlphabet(usize),
    #[error("capacity must be a finite nonnegative number, got {0}")]
    InvalidCapacity(f64),
    #[error("malformed trace for item `{item}`: {reason}")]
    MalformedTrace { item: String, reason: String },
}

/// C_T = T ln|Σ⊥|.
pub fn interface_capacity(max_rounds: usize, alphabet_size: usize) -> Result<f64, CapacityError> {
    if alphabet_size < 2 {
        return Err(CapacityError::InvalidAlphabet(alphabet_size));
    }
    Ok(max_rounds as f64 * libm::log(alphabet_size as f64))
}

/// √(2 C_T), the bound on the expected generalization gap.
pub fn generalization_bound(capacity_nats: f64) -> Result<f64, CapacityError> {
    if !capacity_nats.is_finite() || capacity_nats < 0.0 {
        return Err(CapacityError::InvalidCapacity(capacity_nats));
    }
    Ok(libm::sqrt(2.0 * capacity_nats))
}

/// √((2/n)·H), the sample-size dependent step before H is bounded by n C_T.
pub fn n_dependent_bound(entropy_nats: f64, n: usize) -> Result<f64, CapacityError> {
    if !entropy_nats.is_finite() || entropy_nats < 0.0 {
        return Err(CapacityError::InvalidCapacity(entropy_nats));
    }
    if n == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(libm::sqrt(2.0 / n as f64 * entropy_nats))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub max_rounds: usize,
    pub alphabet_size: usize,
    /// True when `alphabet_size` was counted from the traces rather than declared.
    pub alphabet_is_empirical: bool,
    pub capacity_nats: f64,
    pub bound: f64,
    /// Distinct reply strings seen in the traces, rejection phrases included.
    pub empirical_alphabet: usize,
    pub mean_rounds: f64,
    pub rejection_rate: f64,
    pub episodes: usize,
}

/// Accounts for the replies actually exchanged in `episodes`. Capacity uses
/// `declared_alphabet` when given, else the observed alphabet (at least 2).
pub fn empirical_report(
    episodes: &[Episode],
    max_rounds: usize,
    declared_alphabet: Option<usize>,
) -> Result<CapacityReport, CapacityError> {
    let mut replies = BTreeSet::new();
    let mut rounds = 0usize;
    let mut rejections = 0usize;
    for ep in episodes {
        let malformed = |reason: &str| CapacityError::MalformedTrace { item: ep.item_id.clone(), reason: reason.into() };
        let mut ep_rounds = 0;
        let mut ep_rejections = 0;
        for step in &ep.steps {
            match (&step.parsed.action, &step.sensor_reply) {
                (Action::Query(_), Some(reply)) => {
                    ep_rounds += 1;
                    ep_rejections += usize::from(reply.is_rejection());
                    replies.insert(reply.text());
                }
                (Action::Query(_), None) => {}
                (_, Some(_)) => return Err(malformed("a non-query step carries a sensor reply")),
                (_, None) => {}
            }
        }
        if ep_rounds != ep.rounds || ep_rejections != ep.rejections {
            return Err(malformed("round or rejection counts disagree with the steps"));
        }
        if ep.steps.len() > max_rounds {
            return Err(malformed("more steps than the round budget"));
        }
        rounds += ep_rounds;
        rejections += ep_rejections;
    }
    let empirical_alphabet = replies.len();
    let (alphabet_size, alphabet_is_empirical) = match declared_alphabet {
        Some(n) => (n, false),
        None => (empirical_alphabet.max(2), true),
    };
    let capacity_nats = interface_capacity(max_rounds, alphabet_size)?;
    Ok(CapacityReport {
        max_rounds,
        alphabet_size,
        alphabet_is_empirical,
        capacity_nats,
        bound: generalization_bound(capacity_nats)?,
        empirical_alphabet,
        mean_rounds: if episodes.is_empty() { 0.0 } else { rounds as f64 / episodes.len() as f64 },
        rejection_rate: if rounds == 0 { 0.0 } else { rejections as f64 / rounds as f64 },
        episodes: episodes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(interface_capacity(0, 65).unwrap(), 0.0);
        let c = interface_capacity(24, 65).unwrap();
        // 24 * ln 65 = 100.185294...
        assert!((c - 100.185_294_477).abs() < 1e-8, "{c}");
        assert!((generalization_bound(c).unwrap() - 14.155_231_858).abs() < 1e-8);
        assert_eq!(generalization_bound(2.0).unwrap(), 2.0);
        assert_eq!(generalization_bound(0.0).unwrap(), 0.0);
    }

    #[test]
    fn alphabet_below_two_is_rejected() {
        assert_eq!(interface_capacity(3, 1), Err(CapacityError::InvalidAlphabet(1)));
        assert!(generalization_bound(-1.0).is_err());
    }

    #[test]
    fn n_dependent_term_recovers_bound() {
        let c = interface_capacity(24, 65).unwrap();
        let n = 1000;
        let b = n_dependent_bound(n as f64 * c, n).unwrap();
        assert!((b - generalization_bound(c).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn empty_log() {
        let r = empirical_report(&[], 24, None).unwrap();
        assert_eq!(r.empirical_alphabet, 0);
        assert_eq!(r.mean_rounds, 0.0);
    }
}
