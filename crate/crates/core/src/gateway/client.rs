//! Chat-completion HTTP client with retry, exponential backoff, and an
//! optional request-rate gate. Requests are deterministic: temperature is
//! pinned to 0.0 and no sampling parameters are sent beyond it.

use super::prompt::{extract_answer, extract_reasoning};
use serde::{Deserialize, Serialize};
use std::sync::Mutex;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointConfig {
    /// Base URL up to the API root; `/chat/completions` is appended when
    /// not already present.
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the secret. The secret
    /// itself never appears in config files.
    #[serde(default)]
    pub auth_env: Option<String>,
    /// Header carrying the secret. `Authorization` gets a Bearer prefix;
    /// any other header receives the raw value.
    #[serde(default = "default_auth_header")]
    pub auth_header: String,
    /// Pinned to 0.0 for reproducible outputs.
    #[serde(default)]
    pub temperature: f64,
    #[serde(default)]
    pub max_output_tokens: Option<u32>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff")]
    pub initial_backoff_ms: u64,
    /// Optional request-rate ceiling, requests per second.
    #[serde(default)]
    pub requests_per_second: Option<f64>,
}

fn default_auth_header() -> String {
    "Authorization".into()
}
fn default_timeout() -> u64 {
    120
}
fn default_retries() -> u32 {
    3
}
fn default_backoff() -> u64 {
    250
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        EndpointConfig {
            base_url: base_url.into(),
            model: model.into(),
            auth_env: None,
            auth_header: default_auth_header(),
            temperature: 0.0,
            max_output_tokens: None,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            initial_backoff_ms: default_backoff(),
            requests_per_second: None,
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.temperature != 0.0 {
            return Err(GatewayError::InvalidEndpoint(format!(
                "temperature must be 0.0 for reproducible runs, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    pub fn chat_url(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    fn auth(&self) -> Result<Option<(String, String)>, GatewayError> {
        match &self.auth_env {
            None => Ok(None),
            Some(var) => match std::env::var(var) {
                Ok(secret) => {
                    let value = if self.auth_header.eq_ignore_ascii_case("authorization") {
                        format!("Bearer {secret}")
                    } else {
                        secret
                    };
                    Ok(Some((self.auth_header.clone(), value)))
                }
                Err(_) => Err(GatewayError::InvalidEndpoint(format!(
                    "auth environment variable `{var}` is not set"
                ))),
            },
        }
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("endpoint timeout after {attempts} attempts: {url}")]
    EndpointTimeout { url: String, attempts: u32 },
    #[error("endpoint rejected request: status {status}: {body}")]
    EndpointRejected { status: u16, body: String },
    #[error("retries exhausted after {attempts} attempts against {url}: {last_error}")]
    RetriesExhausted {
        url: String,
        attempts: u32,
        last_error: String,
    },
    #[error("malformed endpoint response: {0}")]
    MalformedResponse(String),
    #[error("invalid endpoint config: {0}")]
    InvalidEndpoint(String),
    #[error("retrieval budget {budget} fits no document")]
    RetrievalBudgetInfeasible { budget: usize },
}

/// A captured model response plus request metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResponse {
    pub raw: String,
    pub reasoning: Option<String>,
    /// Extracted answer text; never empty (an empty response degrades to
    /// the no-answer sentinel).
    pub answer: String,
    pub no_answer: bool,
    /// False when the answer marker was missing from the response.
    pub answer_marker_found: bool,
    pub attempts: u32,
    pub latency_ms: u64,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

impl ModelResponse {
    /// Builds the response record from raw content text.
    pub fn from_raw(raw: String, attempts: u32, latency_ms: u64) -> ModelResponse {
        let extracted = extract_answer(&raw);
        let (answer, no_answer) = if extracted.text.is_empty() {
            ("No answer".to_string(), true)
        } else {
            (extracted.text, extracted.no_answer)
        };
        ModelResponse {
            reasoning: extract_reasoning(&raw),
            answer,
            no_answer,
            answer_marker_found: extracted.marker_found,
            raw,
            attempts,
            latency_ms,
            prompt_tokens: None,
            completion_tokens: None,
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_tokens: Option<u32>,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<ChatUsage>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: String,
}

#[derive(Deserialize)]
struct ChatUsage {
    #[serde(default)]
    prompt_tokens: Option<u64>,
    #[serde(default)]
    completion_tokens: Option<u64>,
}

/// Sends one chat-completion request, retrying transient failures
/// (connect errors, timeouts, 429, 5xx) with exponential backoff.
pub fn query_model(prompt: &str, endpoint: &EndpointConfig) -> Result<ModelResponse, GatewayError> {
    endpoint.validate()?;
    let url = endpoint.chat_url();
    let auth = endpoint.auth()?;
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(endpoint.timeout_secs))
        .build()
        .map_err(|e| GatewayError::InvalidEndpoint(e.to_string()))?;

    let body = ChatRequest {
        model: &endpoint.model,
        messages: vec![ChatMessage {
            role: "user",
            content: prompt,
        }],
        temperature: endpoint.temperature,
        max_tokens: endpoint.max_output_tokens,
    };

    let started = Instant::now();
    let max_attempts = endpoint.max_retries.saturating_add(1);
    let mut last_error = String::new();
    let mut timed_out = false;

    for attempt in 1..=max_attempts {
        if attempt > 1 {
            let backoff = endpoint.initial_backoff_ms.saturating_mul(1 << (attempt - 2).min(16));
            std::thread::sleep(Duration::from_millis(backoff));
        }
        let mut request = client.post(&url).json(&body);
        if let Some((header, value)) = &auth {
            request = request.header(header.as_str(), value.as_str());
        }
        match request.send() {
            Ok(response) => {
                let status = response.status();
                if status.is_success() {
                    let parsed: ChatResponse = response
                        .json()
                        .map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
                    let content = parsed
                        .choices
                        .into_iter()
                        .next()
                        .map(|c| c.message.content)
                        .ok_or_else(|| {
                            GatewayError::MalformedResponse("response has no choices".into())
                        })?;
                    let mut out = ModelResponse::from_raw(
                        content,
                        attempt,
                        started.elapsed().as_millis() as u64,
                    );
                    if let Some(usage) = parsed.usage {
                        out.prompt_tokens = usage.prompt_tokens;
                        out.completion_tokens = usage.completion_tokens;
                    }
                    return Ok(out);
                }
                let retryable = status.as_u16() == 429 || status.is_server_error();
                let text = response.text().unwrap_or_default();
                if !retryable {
                    return Err(GatewayError::EndpointRejected {
                        status: status.as_u16(),
                        body: text,
                    });
                }
                timed_out = false;
                last_error = format!("status {status}: {text}");
            }
            Err(e) => {
                timed_out = e.is_timeout();
                last_error = e.to_string();
            }
        }
    }

    if timed_out {
        Err(GatewayError::EndpointTimeout {
            url,
            attempts: max_attempts,
        })
    } else {
        Err(GatewayError::RetriesExhausted {
            url,
            attempts: max_attempts,
            last_error,
        })
    }
}

/// Minimum-interval request gate shared across worker threads.
pub struct RateLimiter {
    min_interval: Duration,
    last: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(requests_per_second: f64) -> RateLimiter {
        RateLimiter {
            min_interval: Duration::from_secs_f64(1.0 / requests_per_second.max(1e-6)),
            last: Mutex::new(None),
        }
    }

    pub fn wait(&self) {
        let sleep_for = {
            let mut last = self.last.lock().expect("rate limiter lock");
            let now = Instant::now();
            let wait = match *last {
                Some(prev) => {
                    let due = prev + self.min_interval;
                    due.saturating_duration_since(now)
                }
                None => Duration::ZERO,
            };
            *last = Some(now + wait);
            wait
        };
        if !sleep_for.is_zero() {
            std::thread::sleep(sleep_for);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chat_url_appends_once() {
        let mut cfg = EndpointConfig::new("http://localhost:9999/v1", "m");
        assert_eq!(cfg.chat_url(), "http://localhost:9999/v1/chat/completions");
        cfg.base_url = "http://localhost:9999/v1/chat/completions".into();
        assert_eq!(cfg.chat_url(), "http://localhost:9999/v1/chat/completions");
    }

    #[test]
    fn nonzero_temperature_is_rejected() {
        let mut cfg = EndpointConfig::new("http://x", "m");
        cfg.temperature = 0.7;
        assert!(matches!(
            cfg.validate(),
            Err(GatewayError::InvalidEndpoint(_))
        ));
    }

    #[test]
    fn empty_raw_degrades_to_no_answer() {
        let r = ModelResponse::from_raw(String::new(), 1, 0);
        assert_eq!(r.answer, "No answer");
        assert!(r.no_answer);
        assert!(!r.answer_marker_found);
    }

    #[test]
    fn rate_limiter_spaces_requests() {
        let limiter = RateLimiter::new(200.0); // 5ms interval
        let start = Instant::now();
        for _ in 0..4 {
            limiter.wait();
        }
        assert!(start.elapsed() >= Duration::from_millis(15));
    }
}
