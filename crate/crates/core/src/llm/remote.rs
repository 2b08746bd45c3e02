use std::sync::OnceLock;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ChatRequest, ChatResponse, LlmClient, LlmError};

const TRANSIENT_RETRIES: u32 = 2;

/// A generic chat-completion endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub base_url: String,
    #[serde(default = "default_path")]
    pub path: String,
    #[serde(default = "default_auth_header")]
    pub auth_header: String,
    /// Name of the environment variable holding the token, never the token itself.
    #[serde(default)]
    pub auth_token_env: Option<String>,
    pub model: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_path() -> String {
    "/v1/chat/completions".into()
}

fn default_auth_header() -> String {
    "Authorization".into()
}

fn default_timeout_ms() -> u64 {
    30_000
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            path: default_path(),
            auth_header: default_auth_header(),
            auth_token_env: None,
            model: model.into(),
            timeout_ms: default_timeout_ms(),
        }
    }

    fn url(&self) -> String {
        format!("{}/{}", self.base_url.trim_end_matches('/'), self.path.trim_start_matches('/'))
    }
}

pub struct RemoteLlm {
    config: RemoteConfig,
    provider_id: String,
    // built lazily so construction is safe inside an async runtime
    client: OnceLock<Result<reqwest::blocking::Client, String>>,
}

impl RemoteLlm {
    pub fn new(config: RemoteConfig) -> Self {
        let provider_id = format!("remote:{}", config.model);
        Self { config, provider_id, client: OnceLock::new() }
    }

    fn client(&self) -> Result<&reqwest::blocking::Client, LlmError> {
        self.client
            .get_or_init(|| {
                reqwest::blocking::Client::builder()
                    .timeout(Duration::from_millis(self.config.timeout_ms))
                    .build()
                    .map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| LlmError::ProviderUnavailable(e.clone()))
    }

    fn body(&self, request: &ChatRequest) -> serde_json::Value {
        let mut body = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": request.system_text},
                {"role": "user", "content": request.user_text},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        if let Some(seed) = request.seed {
            body["seed"] = json!(seed);
        }
        body
    }

    fn attempt(&self, request: &ChatRequest) -> Result<String, (LlmError, bool)> {
        let client = self.client().map_err(|e| (e, false))?;
        let mut builder = client.post(self.config.url()).json(&self.body(request));
        if let Some(var) = &self.config.auth_token_env {
            let token = std::env::var(var).map_err(|_| {
                (LlmError::ProviderUnavailable(format!("environment variable {var} is not set")), false)
            })?;
            let value = if self.config.auth_header.eq_ignore_ascii_case("authorization") {
                format!("Bearer {token}")
            } else {
                token
            };
            builder = builder.header(self.config.auth_header.as_str(), value);
        }
        let response = builder.send().map_err(|e| {
            if e.is_timeout() {
                (LlmError::Timeout(self.config.timeout_ms), true)
            } else {
                (LlmError::ProviderUnavailable(e.to_string()), true)
            }
        })?;
        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err((LlmError::ProviderUnavailable(format!("HTTP {status}")), true));
        }
        if status.is_client_error() {
            return Err((LlmError::ProviderRejected(format!("HTTP {status}")), false));
        }
        let body: serde_json::Value =
            response.json().map_err(|e| (LlmError::ProviderRejected(format!("unreadable response: {e}")), false))?;
        extract_text(&body)
            .map(str::to_string)
            .ok_or_else(|| (LlmError::ProviderRejected("response has no message content".into()), false))
    }
}

/// `choices[0].message.content`, the common chat-completion shape.
fn extract_text(body: &serde_json::Value) -> Option<&str> {
    body.get("choices")?.get(0)?.get("message")?.get("content")?.as_str()
}

impl LlmClient for RemoteLlm {
    fn provider_id(&self) -> &str {
        &self.provider_id
    }

    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        request.validate()?;
        let started = Instant::now();
        let mut attempt = 0;
        loop {
            match self.attempt(request) {
                Ok(text) => {
                    return Ok(ChatResponse {
                        text,
                        provider_id: self.provider_id.clone(),
                        latency_ms: started.elapsed().as_millis() as u64,
                    })
                }
                Err((err, transient)) => {
                    if !transient || attempt >= TRANSIENT_RETRIES {
                        return Err(err);
                    }
                    attempt += 1;
                    std::thread::sleep(Duration::from_millis(100 * u64::from(attempt)));
                }
            }
        }
    }
}
