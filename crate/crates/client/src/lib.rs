//! OpenAI-style chat-completion client for LLM redaction, a scripted mock
//! endpoint for tests, and latency benchmarking.

pub mod bench;
pub mod inject;
pub mod mock;

use std::time::{Duration, Instant};

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use redactkit_core::prompts::{build_ft_prompt, build_it_prompt, PromptMode, RedactionResult};

pub use bench::bench_latency;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    /// Base URL; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token. The token
    /// itself is never stored in configuration.
    pub auth_env_var: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_ms: u64,
    pub max_parallel: usize,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "http://127.0.0.1:8000/v1".into(),
            model: "redactor".into(),
            auth_env_var: None,
            temperature: 0.0,
            max_tokens: 512,
            timeout_ms: 60_000,
            max_parallel: 4,
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<(), ClientError> {
        let bad = |m: &str| Err(ClientError::InvalidConfig(m.to_string()));
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad("temperature must be within [0, 2]");
        }
        if self.max_tokens == 0 {
            return bad("max_tokens must be positive");
        }
        if self.timeout_ms == 0 {
            return bad("timeout_ms must be positive");
        }
        if self.max_parallel == 0 {
            return bad("max_parallel must be at least 1");
        }
        Ok(())
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Endpoint { status: u16, body: String },
    #[error("endpoint returned no completion text")]
    EmptyCompletion,
    #[error("RAG mode requires an assembled context")]
    MissingContext,
    #[error("invalid endpoint config: {0}")]
    InvalidConfig(String),
}

impl ClientError {
    /// Short failure class used in run reports.
    pub fn class(&self) -> &'static str {
        match self {
            ClientError::Transport(_) => "transport",
            ClientError::Endpoint { .. } => "endpoint",
            ClientError::EmptyCompletion => "empty",
            ClientError::MissingContext => "missing_context",
            ClientError::InvalidConfig(_) => "config",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    /// `usage.completion_tokens` when the endpoint reports it.
    pub completion_tokens: Option<u64>,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedactRequest {
    pub text: String,
    /// Assembled RAG prompt; required in RAG mode, ignored otherwise.
    pub context: Option<String>,
}

impl RedactRequest {
    pub fn plain(text: impl Into<String>) -> Self {
        RedactRequest { text: text.into(), context: None }
    }
}

#[derive(Debug, Deserialize)]
struct WireResponse {
    #[serde(default)]
    choices: Vec<WireChoice>,
    usage: Option<WireUsage>,
}

#[derive(Debug, Deserialize)]
struct WireChoice {
    message: Option<WireMessage>,
}

#[derive(Debug, Deserialize)]
struct WireMessage {
    content: Option<String>,
}

#[derive(Debug, Deserialize)]
struct WireUsage {
    completion_tokens: Option<u64>,
}

pub struct LlmClient {
    http: reqwest::Client,
    config: EndpointConfig,
    token: Option<String>,
}

impl LlmClient {
    /// Reads the bearer token from `auth_env_var` if one is configured and set.
    pub fn new(config: EndpointConfig) -> Result<Self, ClientError> {
        config.validate()?;
        let token = config.auth_env_var.as_deref().and_then(|v| std::env::var(v).ok()).filter(|t| !t.is_empty());
        let http = reqwest::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(LlmClient { http, config, token })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    /// Sends one chat-completion request and times it.
    pub async fn complete(&self, prompt: &str) -> Result<Completion, ClientError> {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });
        let mut req = self.http.post(self.config.url()).json(&body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let start = Instant::now();
        let resp = req.send().await.map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().await.map_err(|e| ClientError::Transport(e.to_string()))?;
        let latency_ms = start.elapsed().as_secs_f64() * 1000.0;
        if !status.is_success() {
            return Err(ClientError::Endpoint { status: status.as_u16(), body: text });
        }
        let wire: WireResponse = serde_json::from_str(&text).map_err(|_| ClientError::EmptyCompletion)?;
        let content = wire
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message)
            .and_then(|m| m.content)
            .filter(|c| !c.trim().is_empty())
            .ok_or(ClientError::EmptyCompletion)?;
        Ok(Completion {
            text: content,
            completion_tokens: wire.usage.and_then(|u| u.completion_tokens),
            latency_ms,
        })
    }

    pub async fn llm_redact(
        &self,
        text: &str,
        mode: PromptMode,
        context: Option<&str>,
    ) -> Result<RedactionResult, ClientError> {
        let prompt = match mode {
            PromptMode::Ft => build_ft_prompt(text),
            PromptMode::It => build_it_prompt(text),
            PromptMode::Rag => context.ok_or(ClientError::MissingContext)?.to_string(),
        };
        let c = self.complete(&prompt).await?;
        Ok(RedactionResult::from_completion(c.text, mode, c.latency_ms))
    }

    /// Redacts every request with at most `max_parallel` in flight; results
    /// come back in input order.
    pub async fn redact_batch(
        &self,
        requests: &[RedactRequest],
        mode: PromptMode,
    ) -> Vec<Result<RedactionResult, ClientError>> {
        stream::iter(requests)
            .map(|r| self.llm_redact(&r.text, mode, r.context.as_deref()))
            .buffered(self.config.max_parallel)
            .collect()
            .await
    }
}
