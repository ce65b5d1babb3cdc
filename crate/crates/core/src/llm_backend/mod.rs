//! Text-completion interface shared by every language role of the agent.
//!
//! Prompts identify their role with a `[role: <name>]` tag at the start of
//! the system message. Structured fields inside the user message are
//! `Key: value` lines, which is what the scripted backend reads.

mod cassette;
mod live;
mod scripted;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cassette::{digest, request_text, Cassette, CassetteEntry, Recorder, ReplayBackend};
pub use live::{LiveBackend, ENV_API_KEY, ENV_MODEL, ENV_URL};
pub use scripted::{Noise, ScriptedBackend};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            max_tokens: 256,
        }
    }
}

/// Language roles the agent issues requests for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptRole {
    Splitter,
    Rationalizer,
    Planner,
    Describer,
    Reflector,
}

impl PromptRole {
    pub const ALL: [PromptRole; 5] = [
        PromptRole::Splitter,
        PromptRole::Rationalizer,
        PromptRole::Planner,
        PromptRole::Describer,
        PromptRole::Reflector,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PromptRole::Splitter => "splitter",
            PromptRole::Rationalizer => "rationalizer",
            PromptRole::Planner => "planner",
            PromptRole::Describer => "describer",
            PromptRole::Reflector => "reflector",
        }
    }

    pub fn tag(&self) -> String {
        format!("[role: {}]", self.as_str())
    }

    /// Role named by the tag at the start of the first system message.
    pub fn of(messages: &[ChatMessage]) -> Option<PromptRole> {
        let first = messages.first().filter(|m| m.role == Role::System)?;
        let rest = first.content.trim_start().strip_prefix("[role: ")?;
        let name = &rest[..rest.find(']')?];
        PromptRole::ALL.into_iter().find(|r| r.as_str() == name)
    }
}

impl fmt::Display for PromptRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend-unavailable: {0}")]
    Unavailable(String),
    #[error("cassette-miss: no recorded reply for request {digest} (occurrence {occurrence})")]
    CassetteMiss { digest: String, occurrence: usize },
    #[error("cassette i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("cassette format, line {line}: {msg}")]
    CassetteFormat { line: usize, msg: String },
}

pub trait Backend: Send {
    fn complete(&mut self, messages: &[ChatMessage], params: &Params) -> Result<String, BackendError>;
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn complete(&mut self, messages: &[ChatMessage], params: &Params) -> Result<String, BackendError> {
        (**self).complete(messages, params)
    }
}

/// Checks the request shape every backend requires: non-empty, system
/// first, no empty contents.
pub fn validate(messages: &[ChatMessage]) -> Result<(), BackendError> {
    match messages.first() {
        None => return Err(BackendError::InvalidRequest("no messages".into())),
        Some(m) if m.role != Role::System => {
            return Err(BackendError::InvalidRequest(
                "first message must be a system message".into(),
            ))
        }
        _ => {}
    }
    if messages.iter().any(|m| m.content.is_empty()) {
        return Err(BackendError::InvalidRequest("empty message content".into()));
    }
    Ok(())
}

/// Value of the first `key: value` line in the user messages.
pub fn field<'a>(messages: &'a [ChatMessage], key: &str) -> Option<&'a str> {
    messages
        .iter()
        .filter(|m| m.role == Role::User)
        .flat_map(|m| m.content.lines())
        .find_map(|line| line.strip_prefix(key)?.strip_prefix(": ").map(str::trim))
}
