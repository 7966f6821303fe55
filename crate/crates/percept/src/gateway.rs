//! Chat-completions client shared by every model-backed role.
//!
//! All network I/O in the workspace goes through [`ChatBackend`]. The HTTP
//! implementation speaks the OpenAI-compatible JSON shape and retries every
//! failure with exponential backoff.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Mutex;
use std::time::Duration;

use percept_core::protocol::{Message, Role};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoleConfig {
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token. Unset means no auth header.
    pub api_key_env: Option<String>,
    pub timeout_secs: f64,
    pub max_attempts: usize,
    pub backoff_ms: u64,
}

impl Default for RoleConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: String::new(),
            api_key_env: None,
            timeout_secs: 60.0,
            max_attempts: 3,
            backoff_ms: 500,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub roles: BTreeMap<String, RoleConfig>,
}

impl GatewayConfig {
    pub fn role(&self, name: &str) -> Result<&RoleConfig, GatewayError> {
        self.roles.get(name).ok_or_else(|| GatewayError::UnknownRole(name.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub role_name: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stop_sequences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("role `{0}` is not configured")]
    UnknownRole(String),
    #[error("credential variable `{0}` is not set")]
    MissingCredential(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("request timed out")]
    Timeout,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned status {0}")]
    BadStatus(u16),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
}

impl GatewayError {
    /// Configuration problems fail immediately; everything else is retried.
    pub fn is_retryable(&self) -> bool {
        matches!(self, Self::Timeout | Self::Transport(_) | Self::BadStatus(_) | Self::MalformedResponse(_))
    }
}

pub trait ChatBackend: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<String, GatewayError>;
}

/// Request body in the chat-completions wire shape. Image references become
/// `image_url` content parts on their user turn.
pub fn wire_body(model: &str, request: &ChatRequest) -> Value {
    let messages: Vec<Value> = request
        .messages
        .iter()
        .map(|m| {
            let role = match m.role {
                Role::System => "system",
                Role::User => "user",
                Role::Assistant => "assistant",
            };
            match &m.image_ref {
                Some(url) => json!({
                    "role": role,
                    "content": [
                        {"type": "text", "text": m.content},
                        {"type": "image_url", "image_url": {"url": url}},
                    ],
                }),
                None => json!({"role": role, "content": m.content}),
            }
        })
        .collect();
    let mut body = json!({
        "model": model,
        "messages": messages,
        "temperature": request.temperature,
    });
    if let Some(n) = request.max_tokens {
        body["max_tokens"] = json!(n);
    }
    if !request.stop_sequences.is_empty() {
        body["stop"] = json!(request.stop_sequences);
    }
    body
}

/// First choice's message text. Array content is joined from its text parts.
pub fn parse_completion(body: &str) -> Result<String, GatewayError> {
    let v: Value = serde_json::from_str(body).map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
    let content = &v["choices"][0]["message"]["content"];
    match content {
        Value::String(s) => Ok(s.clone()),
        Value::Array(parts) => Ok(parts.iter().filter_map(|p| p["text"].as_str()).collect::<Vec<_>>().join("")),
        _ => Err(GatewayError::MalformedResponse("no choices[0].message.content".into())),
    }
}

/// Replaces every occurrence of `secret` in `text`.
pub fn redact(text: &str, secret: Option<&str>) -> String {
    match secret {
        Some(s) if !s.is_empty() => text.replace(s, "[REDACTED]"),
        _ => text.to_string(),
    }
}

#[derive(Serialize)]
struct LogEntry<'a> {
    role: &'a str,
    endpoint: &'a str,
    attempt: usize,
    authorization: Option<&'static str>,
    request: &'a Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    response: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Blocking HTTP client over a pooled agent.
pub struct HttpGateway {
    config: GatewayConfig,
    agents: BTreeMap<String, ureq::Agent>,
    log: Option<Mutex<Box<dyn Write + Send>>>,
}

impl HttpGateway {
    pub fn new(config: GatewayConfig) -> Self {
        let agents = config
            .roles
            .iter()
            .map(|(name, role)| {
                let agent: ureq::Agent = ureq::Agent::config_builder()
                    .timeout_global(Some(Duration::from_secs_f64(role.timeout_secs.max(0.001))))
                    .http_status_as_error(false)
                    .build()
                    .into();
                (name.clone(), agent)
            })
            .collect();
        Self { config, agents, log: None }
    }

    /// Appends one JSON line per attempt to `sink`, credentials redacted.
    pub fn with_log(mut self, sink: Box<dyn Write + Send>) -> Self {
        self.log = Some(Mutex::new(sink));
        self
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    fn attempt(&self, agent: &ureq::Agent, role: &RoleConfig, key: Option<&str>, body: &str) -> Result<String, GatewayError> {
        let mut req = agent.post(&role.endpoint).header("Content-Type", "application/json");
        if let Some(k) = key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req.send(body).map_err(|e| match e {
            ureq::Error::Timeout(_) => GatewayError::Timeout,
            other => GatewayError::Transport(other.to_string()),
        })?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => GatewayError::Timeout,
            other => GatewayError::Transport(other.to_string()),
        })?;
        if !(200..300).contains(&status) {
            return Err(GatewayError::BadStatus(status));
        }
        parse_completion(&text)
    }

    fn write_log(&self, entry: &LogEntry<'_>, key: Option<&str>) {
        if let Some(log) = &self.log {
            if let Ok(line) = serde_json::to_string(entry) {
                let mut sink = log.lock().unwrap_or_else(|p| p.into_inner());
                let _ = writeln!(sink, "{}", redact(&line, key));
            }
        }
    }
}

impl ChatBackend for HttpGateway {
    fn chat(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let role = self.config.role(&request.role_name)?;
        if request.messages.is_empty() {
            return Err(GatewayError::InvalidRequest("no messages".into()));
        }
        if request.temperature.is_nan() || request.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest("temperature must be nonnegative".into()));
        }
        let key = match &role.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| GatewayError::MissingCredential(var.clone()))?),
            None => None,
        };
        let agent = &self.agents[&request.role_name];
        let body_value = wire_body(&role.model, request);
        let body = body_value.to_string();
        let attempts = role.max_attempts.max(1);
        let mut last = GatewayError::Transport("no attempt made".into());
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(role.backoff_ms.saturating_mul(1 << (attempt - 1).min(16))));
            }
            let result = self.attempt(agent, role, key.as_deref(), &body);
            self.write_log(
                &LogEntry {
                    role: &request.role_name,
                    endpoint: &role.endpoint,
                    attempt,
                    authorization: key.as_ref().map(|_| "Bearer [REDACTED]"),
                    request: &body_value,
                    response: result.as_ref().ok().map(String::as_str),
                    error: result.as_ref().err().map(ToString::to_string),
                },
                key.as_deref(),
            );
            match result {
                Ok(text) => return Ok(text),
                Err(e) if e.is_retryable() => last = e,
                Err(e) => return Err(e),
            }
        }
        Err(last)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(messages: Vec<Message>) -> ChatRequest {
        ChatRequest { role_name: "sensor".into(), messages, temperature: 0.0, max_tokens: Some(64), stop_sequences: vec![] }
    }

    #[test]
    fn image_refs_become_content_parts() {
        let body = wire_body("m", &request(vec![Message::system("s"), Message::user("Is there a dog?").with_image("file://x.jpg")]));
        assert_eq!(body["messages"][0]["content"], "s");
        assert_eq!(body["messages"][1]["content"][1]["image_url"]["url"], "file://x.jpg");
        assert_eq!(body["max_tokens"], 64);
        assert!(body.get("stop").is_none());
    }

    #[test]
    fn completion_parsing() {
        assert_eq!(parse_completion(r#"{"choices":[{"message":{"content":"two"}}]}"#).unwrap(), "two");
        assert_eq!(
            parse_completion(r#"{"choices":[{"message":{"content":[{"type":"text","text":"a"},{"text":"b"}]}}]}"#).unwrap(),
            "ab"
        );
        assert!(matches!(parse_completion("{}"), Err(GatewayError::MalformedResponse(_))));
        assert!(matches!(parse_completion("nope"), Err(GatewayError::MalformedResponse(_))));
    }

    #[test]
    fn unknown_role_fails_before_any_network_call() {
        let gw = HttpGateway::new(GatewayConfig::default());
        assert_eq!(gw.chat(&request(vec![Message::user("hi")])), Err(GatewayError::UnknownRole("sensor".into())));
    }
}
