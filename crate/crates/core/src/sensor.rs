//! The perception-only sensor contract and its rejection policy.
//!
//! A sensor sees exactly one `(image_ref, query)` pair per call and keeps no
//! dialogue state. It replies with a short answer or with one of two fixed
//! rejection phrases, which are detected by exact match after trimming.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::prompts;

/// Rejection phrase for queries outside the perception taxonomy.
pub const REJECT_NON_PERCEPTION: &str = "I cannot answer this question.";
/// Rejection phrase for ill-formed queries or unresolved referents.
pub const REJECT_AMBIGUOUS: &str = "I cannot answer because the question is ambiguous.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RejectKind {
    NonPerception,
    Ambiguous,
}

impl RejectKind {
    pub fn phrase(self) -> &'static str {
        match self {
            RejectKind::NonPerception => REJECT_NON_PERCEPTION,
            RejectKind::Ambiguous => REJECT_AMBIGUOUS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SensorReply {
    Answer(String),
    Reject(RejectKind),
}

impl SensorReply {
    /// The reply exactly as the reasoner sees it.
    pub fn text(&self) -> &str {
        match self {
            SensorReply::Answer(text) => text,
            SensorReply::Reject(kind) => kind.phrase(),
        }
    }

    pub fn is_rejection(&self) -> bool {
        matches!(self, SensorReply::Reject(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    pub rejection_enabled: bool,
    pub temperature: f64,
    pub max_reply_tokens: usize,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self { rejection_enabled: true, temperature: 0.0, max_reply_tokens: 64 }
    }
}

impl SensorConfig {
    pub fn without_rejection() -> Self {
        Self { rejection_enabled: false, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SensorError {
    #[error("sensor unavailable: {0}")]
    Unavailable(String),
}

/// A stateless perception sensor. Implementations must be safe to call from
/// many dialogues at once.
pub trait Sensor: Send + Sync {
    fn answer(&self, image_ref: &str, query: &str) -> Result<SensorReply, SensorError>;
}

impl<S: Sensor + ?Sized> Sensor for &S {
    fn answer(&self, image_ref: &str, query: &str) -> Result<SensorReply, SensorError> {
        (**self).answer(image_ref, query)
    }
}

/// Maps raw endpoint output onto a reply. Only an exact (post-trim) match of a
/// rejection phrase counts as a rejection; case variants stay answers.
pub fn classify_reply(raw: &str) -> SensorReply {
    let trimmed = raw.trim();
    if trimmed == REJECT_NON_PERCEPTION {
        SensorReply::Reject(RejectKind::NonPerception)
    } else if trimmed == REJECT_AMBIGUOUS {
        SensorReply::Reject(RejectKind::Ambiguous)
    } else {
        SensorReply::Answer(trimmed.to_string())
    }
}

/// True when a reply is an answer that only differs from a rejection phrase by
/// case. Callers log these; they are still answers.
pub fn looks_like_mangled_rejection(reply: &SensorReply) -> bool {
    match reply {
        SensorReply::Answer(text) => {
            text.eq_ignore_ascii_case(REJECT_NON_PERCEPTION) || text.eq_ignore_ascii_case(REJECT_AMBIGUOUS)
        }
        SensorReply::Reject(_) => false,
    }
}

pub fn build_sensor_prompt(config: &SensorConfig) -> &'static str {
    if config.rejection_enabled {
        prompts::SENSOR
    } else {
        prompts::SENSOR_OPEN
    }
}

/// Caps a reply at `max_tokens` whitespace tokens, cutting back to the last
/// sentence end inside the cap when there is one.
pub fn truncate_reply(text: &str, max_tokens: usize) -> String {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.len() <= max_tokens {
        return text.trim().to_string();
    }
    let kept = &tokens[..max_tokens];
    let last_sentence = kept
        .iter()
        .rposition(|t| t.ends_with('.') || t.ends_with('!') || t.ends_with('?'));
    let cut = match last_sentence {
        Some(i) => &kept[..=i],
        None => kept,
    };
    cut.join(" ")
}
