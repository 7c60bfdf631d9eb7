//! Live client for OpenAI-compatible chat-completions endpoints.
//!
//! Transient failures (timeouts, 429, 5xx) are retried with capped
//! exponential backoff and jitter, up to a fixed attempt budget. Request
//! errors (other 4xx) are never retried.

use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ChatRequest, ChatResponse, GatewayError, Message, TokenUsage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base_delay_ms: 250,
            max_delay_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    /// Backoff before the given retry (1-based attempt that just failed):
    /// capped exponential plus up to 25% jitter.
    fn delay(&self, failed_attempt: u32) -> Duration {
        let exp = self
            .base_delay_ms
            .saturating_mul(1u64 << (failed_attempt - 1).min(20))
            .min(self.max_delay_ms);
        let jitter = rand::thread_rng().gen_range(0..=exp / 4 + 1);
        Duration::from_millis(exp + jitter)
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [Message],
    #[serde(skip_serializing_if = "Option::is_none")]
    temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_tokens: Option<u32>,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
    #[serde(default)]
    completion_tokens_details: Option<WireUsageDetails>,
}

#[derive(Deserialize)]
struct WireUsageDetails {
    #[serde(default)]
    reasoning_tokens: Option<u64>,
}

impl WireUsage {
    /// Three-way split: prompt tokens are input, detailed reasoning tokens
    /// are reasoning, and the rest of the completion is output.
    fn into_usage(self) -> TokenUsage {
        let reasoning = self
            .completion_tokens_details
            .and_then(|d| d.reasoning_tokens)
            .unwrap_or(0);
        TokenUsage {
            input_tokens: self.prompt_tokens,
            reasoning_tokens: reasoning,
            output_tokens: self.completion_tokens.saturating_sub(reasoning),
        }
    }
}

pub(super) struct LiveClient {
    base_url: String,
    api_key: String,
    http: reqwest::blocking::Client,
    retry: RetryPolicy,
}

impl LiveClient {
    pub(super) fn new(base_url: String, api_key: String, retry: RetryPolicy) -> Self {
        LiveClient {
            base_url: base_url.trim_end_matches('/').to_owned(),
            api_key,
            http: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(600))
                .connect_timeout(Duration::from_secs(10))
                .build()
                .expect("http client construction is infallible"),
            retry,
        }
    }

    pub(super) fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let url = format!("{}/v1/chat/completions", self.base_url);
        let body = WireRequest {
            model: &request.model_id,
            messages: &request.messages,
            temperature: request.temperature,
            max_tokens: request.max_output_tokens,
        };

        let started = Instant::now();
        let mut last_failure = String::new();
        for attempt in 1..=self.retry.max_attempts {
            let sent = self
                .http
                .post(&url)
                .bearer_auth(&self.api_key)
                .json(&body)
                .send();
            match sent {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        let wire: WireResponse = resp.json().map_err(|e| {
                            GatewayError::Provider {
                                status: status.as_u16(),
                                body: format!("unparseable response body: {e}"),
                            }
                        })?;
                        return wire_to_response(wire, request, started.elapsed());
                    }
                    let code = status.as_u16();
                    let text = resp.text().unwrap_or_default();
                    let retryable = code == 429 || (500..600).contains(&code);
                    if !retryable || attempt == self.retry.max_attempts {
                        return Err(GatewayError::Provider {
                            status: code,
                            body: text,
                        });
                    }
                    last_failure = format!("status {code}");
                }
                Err(e) => {
                    let retryable = e.is_timeout() || e.is_connect() || e.is_request();
                    if !retryable || attempt == self.retry.max_attempts {
                        return Err(GatewayError::Transport {
                            attempts: attempt,
                            last: e.to_string(),
                        });
                    }
                    last_failure = e.to_string();
                }
            }
            log::debug!(
                "attempt {attempt}/{} failed ({last_failure}); backing off",
                self.retry.max_attempts
            );
            std::thread::sleep(self.retry.delay(attempt));
        }
        Err(GatewayError::Transport {
            attempts: self.retry.max_attempts,
            last: last_failure,
        })
    }
}

fn wire_to_response(
    wire: WireResponse,
    request: &ChatRequest,
    elapsed: Duration,
) -> Result<ChatResponse, GatewayError> {
    let text = wire
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| GatewayError::Provider {
            status: 200,
            body: "response carried no message content".to_owned(),
        })?;
    Ok(ChatResponse {
        text,
        usage: wire.usage.map(WireUsage::into_usage).unwrap_or_default(),
        model_id: request.model_id.clone(),
        latency_ms: elapsed.as_millis() as u64,
        from_cache: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    /// Minimal scripted HTTP server: answers each incoming request with the
    /// next (status, body) in the script, then closes.
    fn scripted_server(script: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>, std::thread::JoinHandle<()>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(AtomicUsize::new(0));
        let hits_inner = Arc::clone(&hits);
        let handle = std::thread::spawn(move || {
            for (status, body) in script {
                let (mut stream, _) = listener.accept().unwrap();
                hits_inner.fetch_add(1, Ordering::SeqCst);
                // Drain the request: headers, then content-length body bytes.
                let mut buf = Vec::new();
                let mut byte = [0u8; 1];
                while !buf.ends_with(b"\r\n\r\n") {
                    if stream.read(&mut byte).unwrap() == 0 {
                        break;
                    }
                    buf.push(byte[0]);
                }
                let headers = String::from_utf8_lossy(&buf).to_lowercase();
                let content_length = headers
                    .lines()
                    .find_map(|l| l.strip_prefix("content-length:"))
                    .and_then(|v| v.trim().parse::<usize>().ok())
                    .unwrap_or(0);
                let mut body_buf = vec![0u8; content_length];
                stream.read_exact(&mut body_buf).unwrap();

                let reason = if status == 200 { "OK" } else { "Error" };
                let response = format!(
                    "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(response.as_bytes()).unwrap();
            }
        });
        (format!("http://{addr}"), hits, handle)
    }

    fn fast_retry() -> RetryPolicy {
        RetryPolicy {
            max_attempts: 5,
            base_delay_ms: 1,
            max_delay_ms: 4,
        }
    }

    fn request() -> ChatRequest {
        ChatRequest {
            model_id: "test-model".to_owned(),
            messages: vec![Message::user("hello")],
            temperature: None,
            max_output_tokens: Some(16),
            tag: String::new(),
        }
    }

    fn success_body() -> String {
        serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": "**Answer**: (C)"}}],
            "usage": {
                "prompt_tokens": 100,
                "completion_tokens": 2020,
                "completion_tokens_details": {"reasoning_tokens": 2000}
            }
        })
        .to_string()
    }

    #[test]
    fn transient_429_then_success_yields_single_response() {
        let (url, hits, handle) = scripted_server(vec![
            (429, r#"{"error": "rate limited"}"#.to_owned()),
            (200, success_body()),
        ]);
        let client = LiveClient::new(url, "k".to_owned(), fast_retry());
        let resp = client.complete(&request()).unwrap();
        handle.join().unwrap();
        assert_eq!(hits.load(Ordering::SeqCst), 2);
        assert_eq!(resp.text, "**Answer**: (C)");
        assert!(!resp.from_cache);
    }

    #[test]
    fn usage_maps_to_three_way_split() {
        let (url, _, handle) = scripted_server(vec![(200, success_body())]);
        let client = LiveClient::new(url, "k".to_owned(), fast_retry());
        let resp = client.complete(&request()).unwrap();
        handle.join().unwrap();
        assert_eq!(
            resp.usage,
            TokenUsage {
                input_tokens: 100,
                reasoning_tokens: 2000,
                output_tokens: 20,
            }
        );
    }

    #[test]
    fn missing_reasoning_details_means_zero_reasoning() {
        let body = serde_json::json!({
            "choices": [{"message": {"content": "A"}}],
            "usage": {"prompt_tokens": 10, "completion_tokens": 5}
        })
        .to_string();
        let (url, _, handle) = scripted_server(vec![(200, body)]);
        let client = LiveClient::new(url, "k".to_owned(), fast_retry());
        let resp = client.complete(&request()).unwrap();
        handle.join().unwrap();
        assert_eq!(
            resp.usage,
            TokenUsage {
                input_tokens: 10,
                reasoning_tokens: 0,
                output_tokens: 5,
            }
        );
    }

    #[test]
    fn request_invalid_is_never_retried() {
        let (url, hits, handle) = scripted_server(vec![(400, r#"{"error": "bad"}"#.to_owned())]);
        let client = LiveClient::new(url, "k".to_owned(), fast_retry());
        let err = client.complete(&request()).unwrap_err();
        handle.join().unwrap();
        assert_eq!(hits.load(Ordering::SeqCst), 1);
        match err {
            GatewayError::Provider { status, .. } => assert_eq!(status, 400),
            other => panic!("expected provider error, got {other:?}"),
        }
    }

    #[test]
    fn server_errors_exhaust_the_attempt_budget() {
        let script: Vec<(u16, String)> = (0..5).map(|_| (503, "busy".to_owned())).collect();
        let (url, hits, handle) = scripted_server(script);
        let client = LiveClient::new(url, "k".to_owned(), fast_retry());
        let err = client.complete(&request()).unwrap_err();
        handle.join().unwrap();
        assert_eq!(hits.load(Ordering::SeqCst), 5);
        assert!(matches!(err, GatewayError::Provider { status: 503, .. }));
    }
}
