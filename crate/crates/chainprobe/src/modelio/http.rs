//! Blocking HTTP client for OpenAI-compatible chat-completions endpoints.

use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use super::{
    Backend, CompletionRequest, ModelIoError, ModelResponse, ResponseStatus, TokenUsage,
};

/// Chat-completions client. Retries transport errors, HTTP 429, and HTTP 5xx
/// with exponential backoff up to the request's attempt budget.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: Option<String>,
    backoff_base: Duration,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<UsageBody>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChatMessage {
    #[serde(default)]
    content: Option<String>,
    #[serde(default)]
    refusal: Option<String>,
}

#[derive(Deserialize)]
struct UsageBody {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl HttpBackend {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>) -> Result<Self, ModelIoError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| ModelIoError::Transport {
                message: e.to_string(),
                attempts: 0,
            })?;
        Ok(Self {
            client,
            base_url: base_url.into(),
            api_key,
            backoff_base: Duration::from_millis(250),
        })
    }

    /// Base delay before the first retry; doubles per attempt.
    pub fn with_backoff_base(mut self, base: Duration) -> Self {
        self.backoff_base = base;
        self
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }

    fn parse_body(body: &str, latency: Duration) -> Result<ModelResponse, ModelIoError> {
        let parsed: ChatResponse =
            serde_json::from_str(body).map_err(|e| ModelIoError::InvalidResponse(e.to_string()))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| ModelIoError::InvalidResponse("no choices in response".to_owned()))?;
        let usage = parsed.usage.map(|u| TokenUsage {
            prompt_tokens: u.prompt_tokens,
            completion_tokens: u.completion_tokens,
        });
        let refused = choice.message.refusal.is_some()
            || choice.finish_reason.as_deref() == Some("content_filter");
        match choice.message.content {
            Some(text) if !refused => Ok(ModelResponse {
                text: Some(text),
                status: ResponseStatus::Ok,
                usage,
                latency,
            }),
            _ => Ok(ModelResponse {
                text: None,
                status: ResponseStatus::Refused,
                usage,
                latency,
            }),
        }
    }
}

impl Backend for HttpBackend {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<ModelResponse, ModelIoError> {
        let params = request.params;
        let body = json!({
            "model": params.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
        });

        let budget = params.max_retries.max(1);
        let started = Instant::now();
        let mut last_error = String::new();
        for attempt in 1..=budget {
            let mut req = self
                .client
                .post(self.url())
                .timeout(params.timeout())
                .json(&body);
            if let Some(key) = &self.api_key {
                req = req.bearer_auth(key);
            }
            match req.send() {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        let text = response.text().map_err(|e| ModelIoError::Transport {
                            message: e.to_string(),
                            attempts: attempt,
                        })?;
                        log::debug!("completion ok after {attempt} attempt(s)");
                        return Self::parse_body(&text, started.elapsed());
                    }
                    if status.as_u16() == 429 || status.is_server_error() {
                        last_error = format!("HTTP {}", status.as_u16());
                        log::warn!("attempt {attempt}/{budget}: {last_error}, backing off");
                    } else {
                        // Client errors other than rate limiting will not
                        // improve on retry.
                        return Err(ModelIoError::Transport {
                            message: format!("HTTP {}", status.as_u16()),
                            attempts: attempt,
                        });
                    }
                }
                Err(e) if e.is_timeout() => {
                    return Err(ModelIoError::Timeout(params.timeout()));
                }
                Err(e) => {
                    last_error = e.to_string();
                    log::warn!("attempt {attempt}/{budget}: {last_error}");
                }
            }
            if attempt < budget {
                std::thread::sleep(self.backoff_base * 2u32.pow(attempt - 1));
            }
        }
        Err(ModelIoError::Transport {
            message: last_error,
            attempts: budget,
        })
    }

    fn describe(&self) -> String {
        format!("http:{}", self.base_url)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_ok_body() {
        let body = r#"{"choices":[{"message":{"content":"70"},"finish_reason":"stop"}],"usage":{"prompt_tokens":12,"completion_tokens":3}}"#;
        let response = HttpBackend::parse_body(body, Duration::ZERO).unwrap();
        assert_eq!(response.status, ResponseStatus::Ok);
        assert_eq!(response.text.as_deref(), Some("70"));
        assert_eq!(
            response.usage,
            Some(TokenUsage {
                prompt_tokens: 12,
                completion_tokens: 3
            })
        );
    }

    #[test]
    fn parse_refusal_body() {
        let body = r#"{"choices":[{"message":{"content":null,"refusal":"cannot help"},"finish_reason":"stop"}]}"#;
        let response = HttpBackend::parse_body(body, Duration::ZERO).unwrap();
        assert_eq!(response.status, ResponseStatus::Refused);
        assert!(response.text.is_none());
    }

    #[test]
    fn parse_garbage_is_invalid() {
        assert!(matches!(
            HttpBackend::parse_body("not json", Duration::ZERO),
            Err(ModelIoError::InvalidResponse(_))
        ));
    }
}
