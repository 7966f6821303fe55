//! The reasoner/sensor dialogue.
//!
//! [`run_episode`] drives one dialogue: the reasoner produces raw text, the
//! parser extracts an action, queries go to the sensor with nothing but the
//! image reference and the query text, and the loop stops on an answer, on the
//! step budget, or after too many consecutive malformed outputs.

mod parser;
mod render;
mod scripted;

pub use parser::{
    extract_option_letter, parse_reasoner_output, ANSWER_MARKER, QUERY_MARKER, THOUGHT_MARKER,
};
pub use render::{render_reasoner_prompt, Message, Role};
pub use scripted::ScriptedReasoner;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::item::McqItem;
use crate::sensor::{Sensor, SensorError, SensorReply};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Query(String),
    Answer(String),
    Malformed(String),
}

impl Action {
    pub fn kind(&self) -> &'static str {
        match self {
            Action::Query(_) => "query",
            Action::Answer(_) => "answer",
            Action::Malformed(_) => "malformed",
        }
    }

    pub fn text(&self) -> &str {
        match self {
            Action::Query(t) | Action::Answer(t) | Action::Malformed(t) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedStep {
    pub thought: String,
    pub action: Action,
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    /// 1-based.
    pub index: usize,
    pub parsed: ParsedStep,
    pub sensor_reply: Option<SensorReply>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Answered,
    BudgetExhausted,
    MalformedLimit,
    /// A reasoner or sensor call failed; the episode stops where it was. The
    /// last step may be a query without a reply.
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    pub item_id: String,
    pub steps: Vec<Step>,
    pub final_answer: Option<String>,
    pub termination: Termination,
    pub rounds: usize,
    pub rejections: usize,
}

impl Episode {
    /// Text to canonicalize into a prediction: the final answer, or the raw
    /// last output when the budget ran out. Other terminations predict nothing.
    pub fn prediction_text(&self) -> Option<&str> {
        match self.termination {
            Termination::Answered => self.final_answer.as_deref(),
            Termination::BudgetExhausted => self.steps.last().map(|s| s.parsed.raw.as_str()),
            Termination::MalformedLimit | Termination::Aborted => None,
        }
    }

    /// Queries actually sent to the sensor, in order.
    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().filter_map(|s| match &s.parsed.action {
            Action::Query(q) => Some(q.as_str()),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DialogueBudget {
    pub max_steps: usize,
    pub max_malformed: usize,
}

impl Default for DialogueBudget {
    fn default() -> Self {
        Self { max_steps: 24, max_malformed: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReasonerError {
    #[error("reasoner unavailable: {0}")]
    Unavailable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EpisodeError {
    #[error("sensor unavailable at step {}: {source}", .episode.steps.len())]
    SensorUnavailable { episode: Box<Episode>, source: SensorError },
    #[error("reasoner unavailable at step {}: {source}", .episode.steps.len() + 1)]
    ReasonerUnavailable { episode: Box<Episode>, source: ReasonerError },
    #[error("invalid dialogue budget: max_steps and max_malformed must be >= 1")]
    InvalidBudget,
}

impl EpisodeError {
    /// The partial episode, marked `Aborted`, when there is one.
    pub fn episode(&self) -> Option<&Episode> {
        match self {
            EpisodeError::SensorUnavailable { episode, .. } | EpisodeError::ReasonerUnavailable { episode, .. } => {
                Some(episode)
            }
            EpisodeError::InvalidBudget => None,
        }
    }
}

/// A policy that maps the question and dialogue so far to raw text.
pub trait Reasoner: Send + Sync {
    fn respond(&self, item: &McqItem, history: &[Step], rng: &mut dyn RngCore) -> Result<String, ReasonerError>;
}

impl<R: Reasoner + ?Sized> Reasoner for &R {
    fn respond(&self, item: &McqItem, history: &[Step], rng: &mut dyn RngCore) -> Result<String, ReasonerError> {
        (**self).respond(item, history, rng)
    }
}

/// Runs one reasoner/sensor dialogue on `item`.
pub fn run_episode(
    item: &McqItem,
    reasoner: &dyn Reasoner,
    sensor: &dyn Sensor,
    budget: &DialogueBudget,
    rng: &mut dyn RngCore,
) -> Result<Episode, EpisodeError> {
    if budget.max_steps == 0 || budget.max_malformed == 0 {
        return Err(EpisodeError::InvalidBudget);
    }
    let mut episode = Episode {
        item_id: item.id.clone(),
        steps: Vec::new(),
        final_answer: None,
        termination: Termination::BudgetExhausted,
        rounds: 0,
        rejections: 0,
    };
    let mut consecutive_malformed = 0;

    for index in 1..=budget.max_steps {
        let raw = match reasoner.respond(item, &episode.steps, rng) {
            Ok(raw) => raw,
            Err(source) => {
                episode.termination = Termination::Aborted;
                return Err(EpisodeError::ReasonerUnavailable { episode: Box::new(episode), source });
            }
        };
        let parsed = parse_reasoner_output(&raw);
        match &parsed.action {
            Action::Answer(answer) => {
                episode.final_answer = Some(answer.clone());
                episode.termination = Termination::Answered;
                episode.steps.push(Step { index, parsed, sensor_reply: None });
                return Ok(episode);
            }
            Action::Query(query) => {
                consecutive_malformed = 0;
                let reply = match sensor.answer(&item.image_ref, query) {
                    Ok(reply) => reply,
                    Err(source) => {
                        episode.steps.push(Step { index, parsed, sensor_reply: None });
                        episode.termination = Termination::Aborted;
                        return Err(EpisodeError::SensorUnavailable { episode: Box::new(episode), source });
                    }
                };
                episode.rounds += 1;
                if reply.is_rejection() {
                    episode.rejections += 1;
                }
                episode.steps.push(Step { index, parsed, sensor_reply: Some(reply) });
            }
            Action::Malformed(_) => {
                consecutive_malformed += 1;
                episode.steps.push(Step { index, parsed, sensor_reply: None });
                if consecutive_malformed >= budget.max_malformed {
                    episode.termination = Termination::MalformedLimit;
                    return Ok(episode);
                }
            }
        }
    }
    Ok(episode)
}
