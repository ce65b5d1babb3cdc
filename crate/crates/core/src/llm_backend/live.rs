//! Chat-completion client for any server speaking the common
//! `POST {model, messages, temperature, max_tokens}` protocol.

use std::time::Duration;

use serde_json::{json, Value};

use super::{validate, Backend, BackendError, ChatMessage, Params};

pub const ENV_URL: &str = "COGNAV_LLM_URL";
pub const ENV_MODEL: &str = "COGNAV_LLM_MODEL";
pub const ENV_API_KEY: &str = "COGNAV_LLM_API_KEY";

/// Safe to clone across episode loops: the underlying agent pools
/// connections behind shared, synchronized state.
#[derive(Clone, Debug)]
pub struct LiveBackend {
    url: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
    max_attempts: u32,
    backoff: Duration,
}

impl LiveBackend {
    pub fn new(url: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            url: url.into(),
            model: model.into(),
            api_key,
            agent,
            max_attempts: 3,
            backoff: Duration::from_millis(500),
        }
    }

    pub fn from_env() -> Result<Self, BackendError> {
        let url = std::env::var(ENV_URL).map_err(|_| BackendError::Unavailable(format!("{ENV_URL} is not set")))?;
        let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| "gpt-3.5-turbo".into());
        Ok(Self::new(url, model, std::env::var(ENV_API_KEY).ok()))
    }

    pub fn with_retries(mut self, max_attempts: u32, backoff: Duration) -> Self {
        self.max_attempts = max_attempts.max(1);
        self.backoff = backoff;
        self
    }

    fn attempt(&self, body: &Value) -> Result<String, (bool, String)> {
        let mut req = self.agent.post(&self.url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| (true, e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err((true, format!("server returned {status}")));
        }
        if status >= 400 {
            return Err((false, format!("server returned {status}")));
        }
        let value: Value = resp.body_mut().read_json().map_err(|e| (true, e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| (false, "response has no choices[0].message.content".into()))
    }
}

impl Backend for LiveBackend {
    fn complete(&mut self, messages: &[ChatMessage], params: &Params) -> Result<String, BackendError> {
        validate(messages)?;
        let body = json!({
            "model": self.model,
            "messages": messages,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        });
        let mut last = String::new();
        for attempt in 1..=self.max_attempts {
            match self.attempt(&body) {
                Ok(reply) => return Ok(reply),
                Err((transient, msg)) => {
                    log::warn!("live backend attempt {attempt} failed: {msg}");
                    last = msg;
                    if !transient {
                        break;
                    }
                    if attempt < self.max_attempts {
                        std::thread::sleep(self.backoff * attempt);
                    }
                }
            }
        }
        Err(BackendError::Unavailable(last))
    }
}
