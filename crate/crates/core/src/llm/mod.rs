//! Provider-neutral text generation.

pub mod markers;
mod remote;
mod stub;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use remote::{RemoteConfig, RemoteLlm};
pub use stub::{stub_instance, StubLlm, CONCEPTS_PER_DOMAIN, DOMAINS, STUB_PROVIDER_ID};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("provider rejected the request: {0}")]
    ProviderRejected(String),
    #[error("provider timed out after {0} ms")]
    Timeout(u64),
    #[error("invalid chat request: {0}")]
    InvalidRequest(String),
}

impl LlmError {
    pub fn kind(&self) -> &'static str {
        match self {
            LlmError::ProviderUnavailable(_) => "ProviderUnavailable",
            LlmError::ProviderRejected(_) => "ProviderRejected",
            LlmError::Timeout(_) => "Timeout",
            LlmError::InvalidRequest(_) => "InvalidRequest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system_text: String,
    pub user_text: String,
    pub temperature: f32,
    pub max_tokens: u32,
    pub seed: Option<u64>,
}

impl ChatRequest {
    pub fn new(system_text: impl Into<String>, user_text: impl Into<String>) -> Self {
        Self {
            system_text: system_text.into(),
            user_text: user_text.into(),
            temperature: 0.0,
            max_tokens: 512,
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.system_text.trim().is_empty() || self.user_text.trim().is_empty() {
            return Err(LlmError::InvalidRequest("system and user texts must be non-empty".into()));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(LlmError::InvalidRequest("temperature must be a finite value >= 0".into()));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub provider_id: String,
    pub latency_ms: u64,
}

pub trait LlmClient: Send + Sync {
    fn provider_id(&self) -> &str;
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError>;
}

impl<T: LlmClient + ?Sized> LlmClient for Arc<T> {
    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }

    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).chat(request)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderConfig {
    Stub,
    Remote(RemoteConfig),
}

impl ProviderConfig {
    pub fn build(&self) -> Arc<dyn LlmClient> {
        match self {
            ProviderConfig::Stub => Arc::new(StubLlm::new()),
            ProviderConfig::Remote(cfg) => Arc::new(RemoteLlm::new(cfg.clone())),
        }
    }
}
