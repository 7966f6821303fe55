use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{Action, Step};
use crate::item::McqItem;
use crate::prompts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

/// One chat message. `image_ref` is only ever set on user turns addressed to
/// an image-capable model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into(), image_ref: None }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into(), image_ref: None }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into(), image_ref: None }
    }

    pub fn with_image(mut self, image_ref: impl Into<String>) -> Self {
        self.image_ref = Some(image_ref.into());
        self
    }
}

/// The reasoner's view of the dialogue: system prompt, the question with its
/// options, then each reasoner output followed by the sensor reply (rejections
/// verbatim) or the malformed-output notice. No image reference is attached.
pub fn render_reasoner_prompt(item: &McqItem, history: &[Step]) -> Vec<Message> {
    let mut messages = Vec::with_capacity(2 + 2 * history.len());
    messages.push(Message::system(prompts::REASONER));
    messages.push(Message::user(format!("Question: {}\nOptions: {}", item.question, item.options_line())));
    for step in history {
        messages.push(Message::assistant(step.parsed.raw.clone()));
        match (&step.parsed.action, &step.sensor_reply) {
            (Action::Query(_), Some(reply)) => messages.push(Message::user(reply.text().to_string())),
            (Action::Malformed(_), _) => messages.push(Message::user(prompts::MALFORMED_NOTICE)),
            _ => {}
        }
    }
    messages
}
