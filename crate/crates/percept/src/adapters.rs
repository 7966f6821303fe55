//! Endpoint-backed implementations of the reasoner, sensor, direct answerer,
//! judge, solver and canonicalizer contracts.

use std::sync::Arc;

use percept_core::eval::Canonicalizer;
use percept_core::filter::{ComponentError, Judge, Solver};
use percept_core::eval::DirectAnswerer;
use percept_core::item::option_letter;
use percept_core::prompts;
use percept_core::protocol::{extract_option_letter, render_reasoner_prompt, Message, Reasoner, ReasonerError, Step};
use percept_core::sensor::{build_sensor_prompt, classify_reply, truncate_reply};
use percept_core::{McqItem, Sensor, SensorConfig, SensorError, SensorReply};
use rand::RngCore;

use crate::gateway::{ChatBackend, ChatRequest};

/// Text-only solver prompt for the second filter stage.
pub const SOLVER_PROMPT: &str = "You need to answer the following multiple-choice question. No image is provided; answer from the text alone. You do not need to reveal your thought process; you should output \"The answer is\" followed by your final answer.";

/// Canonicalizer prompt for the last canonicalization tier.
pub const CANONICALIZER_PROMPT: &str = "You map a free-form answer onto a list of lettered options. Reply with the single letter of the option the answer refers to, or with \"None\" if it refers to none of them.";

fn question_block(item: &McqItem) -> String {
    format!("Question: {}\nOptions: {}", item.question, item.options_line())
}

#[derive(Clone)]
pub struct Endpoint {
    pub backend: Arc<dyn ChatBackend>,
    pub role: String,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
}

impl Endpoint {
    pub fn new(backend: Arc<dyn ChatBackend>, role: impl Into<String>, temperature: f64, max_tokens: Option<u32>) -> Self {
        Self { backend, role: role.into(), temperature, max_tokens }
    }

    fn call(&self, messages: Vec<Message>) -> Result<String, String> {
        let request = ChatRequest {
            role_name: self.role.clone(),
            messages,
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            stop_sequences: Vec::new(),
        };
        self.backend.chat(&request).map_err(|e| e.to_string())
    }
}

/// Reasoner that sees the rendered dialogue and never the image.
pub struct EndpointReasoner(pub Endpoint);

impl Reasoner for EndpointReasoner {
    fn respond(&self, item: &McqItem, history: &[Step], _: &mut dyn RngCore) -> Result<String, ReasonerError> {
        self.0.call(render_reasoner_prompt(item, history)).map_err(ReasonerError::Unavailable)
    }
}

/// Sensor that receives one user turn: the query with the image attached.
pub struct EndpointSensor {
    pub endpoint: Endpoint,
    pub config: SensorConfig,
}

impl EndpointSensor {
    pub fn messages(&self, image_ref: &str, query: &str) -> Vec<Message> {
        vec![Message::system(build_sensor_prompt(&self.config)), Message::user(query).with_image(image_ref)]
    }
}

impl Sensor for EndpointSensor {
    fn answer(&self, image_ref: &str, query: &str) -> Result<SensorReply, SensorError> {
        let raw = self.endpoint.call(self.messages(image_ref, query)).map_err(SensorError::Unavailable)?;
        let reply = classify_reply(&raw);
        Ok(match reply {
            SensorReply::Answer(text) => {
                let text = truncate_reply(&text, self.config.max_reply_tokens);
                if text.is_empty() {
                    SensorReply::Answer(raw.trim().to_string())
                } else {
                    SensorReply::Answer(text)
                }
            }
            reject => reject,
        })
    }
}

/// End-to-end baseline: the model sees image, question and options.
pub struct EndpointDirect(pub Endpoint);

impl DirectAnswerer for EndpointDirect {
    fn answer(&self, item: &McqItem, chain_of_thought: bool, _: &mut dyn RngCore) -> Result<String, ReasonerError> {
        let system = if chain_of_thought { prompts::END_TO_END_COT } else { prompts::END_TO_END };
        self.0
            .call(vec![Message::system(system), Message::user(question_block(item)).with_image(&item.image_ref)])
            .map_err(ReasonerError::Unavailable)
    }
}

/// Filter judge: sees the image, question and ground truth.
pub struct EndpointJudge(pub Endpoint);

impl Judge for EndpointJudge {
    fn judge(&self, item: &McqItem, _: usize, _: &mut dyn RngCore) -> Result<String, ComponentError> {
        let gold = format!("({}) {}", option_letter(item.gold_index), item.options[item.gold_index]);
        let user = format!("{}\nGround truth: {gold}", question_block(item));
        self.0
            .call(vec![Message::system(prompts::JUDGE), Message::user(user).with_image(&item.image_ref)])
            .map_err(ComponentError::Unavailable)
    }
}

/// Text-only solver: question and options, no image.
pub struct EndpointSolver {
    pub name: String,
    pub endpoint: Endpoint,
}

impl Solver for EndpointSolver {
    fn name(&self) -> &str {
        &self.name
    }

    fn solve(&self, item: &McqItem, _: usize, _: &mut dyn RngCore) -> Result<String, ComponentError> {
        self.endpoint
            .call(vec![Message::system(SOLVER_PROMPT), Message::user(question_block(item))])
            .map_err(ComponentError::Unavailable)
    }
}

/// Last-tier canonicalizer; any failure means no match.
pub struct EndpointCanonicalizer(pub Endpoint);

impl Canonicalizer for EndpointCanonicalizer {
    fn canonicalize(&self, raw: &str, options: &[String]) -> Option<usize> {
        let listed: Vec<String> = options.iter().enumerate().map(|(i, o)| format!("({}) {o}", option_letter(i))).collect();
        let user = format!("Options: {}\nAnswer: {raw}", listed.join(" "));
        let reply = self.0.call(vec![Message::system(CANONICALIZER_PROMPT), Message::user(user)]).ok()?;
        extract_option_letter(&reply, options.len())
    }
}
