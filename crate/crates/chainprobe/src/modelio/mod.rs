//! Pluggable inference backends.
//!
//! Three kinds of backend satisfy the same [`Backend`] trait: an HTTP client
//! for OpenAI-compatible chat-completions endpoints, a replay backend that
//! answers from an archived prompt-to-response store, and the offline
//! surrogate extractors in [`crate::surrogate`]. Every completed exchange
//! can be recorded to a JSONL archive keyed by a hash of the rendered
//! prompt, the inference parameters, and a caller salt, which makes runs
//! resumable and tests offline.

mod archive;
mod http;
mod replay;

pub use archive::{ArchiveEntry, ArchiveParams, ResponseArchive};
pub use http::HttpBackend;
pub use replay::{RecordingBackend, ReplayBackend};

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("model refused to answer")]
    Refused,
    #[error("no fixture for key {key}")]
    NoFixture { key: String },
    #[error("malformed completion response: {0}")]
    InvalidResponse(String),
    #[error("archive error: {0}")]
    Archive(String),
    #[error("missing credential: set {0}")]
    MissingCredential(String),
}

/// Inference parameters sent with every completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceParams {
    pub model_id: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    /// Per-request timeout.
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    /// Total attempt budget for transport errors and rate limits.
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
}

fn default_timeout_secs() -> u64 {
    120
}

fn default_max_retries() -> u32 {
    3
}

impl InferenceParams {
    pub fn new(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            temperature: 0.5,
            max_output_tokens: 5000,
            timeout_secs: default_timeout_secs(),
            max_retries: default_max_retries(),
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }
}

/// Terminal status of one completion attempt chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseStatus {
    Ok,
    Refused,
    TransportError,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// A completed exchange. `status == Ok` if and only if `text` is present.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelResponse {
    pub text: Option<String>,
    pub status: ResponseStatus,
    pub usage: Option<TokenUsage>,
    pub latency: Duration,
}

impl ModelResponse {
    pub fn ok(text: impl Into<String>) -> Self {
        Self {
            text: Some(text.into()),
            status: ResponseStatus::Ok,
            usage: None,
            latency: Duration::ZERO,
        }
    }

    pub fn refused() -> Self {
        Self {
            text: None,
            status: ResponseStatus::Refused,
            usage: None,
            latency: Duration::ZERO,
        }
    }
}

/// One completion request. `salt` distinguishes archive entries that share a
/// prompt, such as repeated samples of the same question.
pub struct CompletionRequest<'a> {
    pub prompt: &'a str,
    pub params: &'a InferenceParams,
    pub salt: &'a str,
}

/// Archive key: hash of the rendered prompt, the parameters that shape the
/// completion, and the caller salt.
pub fn archive_key(prompt: &str, params: &InferenceParams, salt: &str) -> String {
    let canonical = format!(
        "{}\x1f{}\x1f{}\x1f{}\x1f{}",
        params.model_id, params.temperature, params.max_output_tokens, salt, prompt
    );
    let digest = Sha256::digest(canonical.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write;
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

/// An inference backend. Shareable across threads; implementations bound
/// their own concurrency.
pub trait Backend: Send + Sync {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<ModelResponse, ModelIoError>;

    /// Short description for logs and reports.
    fn describe(&self) -> String;
}

/// Map a completion outcome onto the status recorded for statistics.
pub fn status_of(result: &Result<ModelResponse, ModelIoError>) -> ResponseStatus {
    match result {
        Ok(response) => response.status,
        Err(ModelIoError::Timeout(_)) => ResponseStatus::Timeout,
        Err(ModelIoError::Refused) => ResponseStatus::Refused,
        Err(_) => ResponseStatus::TransportError,
    }
}

/// Collect one reasoning chain for a question. `salt` should carry the
/// sample index so repeated samples occupy distinct archive slots.
pub fn collect_chain(
    question: &str,
    params: &InferenceParams,
    backend: &dyn Backend,
    salt: &str,
) -> Result<String, ModelIoError> {
    let response = backend.complete(&CompletionRequest {
        prompt: question,
        params,
        salt,
    })?;
    match response.status {
        ResponseStatus::Ok => Ok(response.text.unwrap_or_default()),
        ResponseStatus::Refused => Err(ModelIoError::Refused),
        ResponseStatus::Timeout => Err(ModelIoError::Timeout(params.timeout())),
        ResponseStatus::TransportError => Err(ModelIoError::Transport {
            message: "backend reported transport error".to_owned(),
            attempts: params.max_retries,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_defaults_are_frozen() {
        let params = InferenceParams::new("test-model");
        assert_eq!(params.temperature, 0.5);
        assert_eq!(params.max_output_tokens, 5000);
    }

    #[test]
    fn archive_key_depends_on_all_parts() {
        let params = InferenceParams::new("m");
        let base = archive_key("p", &params, "");
        assert_eq!(base.len(), 64);
        assert_ne!(base, archive_key("q", &params, ""));
        assert_ne!(base, archive_key("p", &params, "s1"));
        let mut other = params.clone();
        other.temperature = 0.7;
        assert_ne!(base, archive_key("p", &other, ""));
        let mut other = params.clone();
        other.model_id = "m2".to_owned();
        assert_ne!(base, archive_key("p", &other, ""));
    }
}
