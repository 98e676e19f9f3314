//! Remote chat-endpoint subjects.
//!
//! One chat-style POST per sample (no batched completions), dispatched by up
//! to `max_parallel` worker threads. Sample indices are assigned before
//! dispatch and results land in pre-assigned slots, so the returned order is
//! independent of request interleaving. Transient failures (429, 5xx,
//! network errors) are retried with exponential backoff and jitter, honoring
//! any server retry-after hint; a request that exhausts its attempts yields
//! a transcript marked failed rather than a dropped slot.

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{SampleError, Transcript, TRANSCRIPT_SCHEMA_VERSION};
use crate::gamespec::PromptBundle;
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
    /// Fraction of the backoff added as seeded random jitter.
    pub jitter: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 5, initial_backoff_ms: 250, max_backoff_ms: 8_000, jitter: 0.25 }
    }
}

/// Token-bucket rate limit per endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateLimit {
    pub requests_per_minute: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteSpec {
    /// Full URL of the chat-completions endpoint.
    pub base_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Name of the environment variable holding the bearer token; secrets
    /// never live in config files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env: Option<String>,
    #[serde(default = "default_max_parallel")]
    pub max_parallel: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_limit: Option<RateLimit>,
    /// Per-request timeout in seconds.
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_max_parallel() -> usize {
    4
}

fn default_timeout_secs() -> u64 {
    60
}

struct TokenBucket {
    tokens: Mutex<(f64, std::time::Instant)>,
    rate_per_sec: f64,
    capacity: f64,
}

impl TokenBucket {
    fn new(limit: RateLimit) -> Self {
        let rate_per_sec = (limit.requests_per_minute / 60.0).max(1e-3);
        Self {
            tokens: Mutex::new((1.0, std::time::Instant::now())),
            rate_per_sec,
            capacity: (limit.requests_per_minute / 60.0).max(1.0),
        }
    }

    fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.tokens.lock().expect("bucket lock");
                let now = std::time::Instant::now();
                let elapsed = now.duration_since(state.1).as_secs_f64();
                state.0 = (state.0 + elapsed * self.rate_per_sec).min(self.capacity);
                state.1 = now;
                if state.0 >= 1.0 {
                    state.0 -= 1.0;
                    None
                } else {
                    Some(Duration::from_secs_f64((1.0 - state.0) / self.rate_per_sec))
                }
            };
            match wait {
                None => return,
                Some(d) => std::thread::sleep(d),
            }
        }
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 2],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: String,
}

enum AttemptOutcome {
    Ok(String),
    Retry { error: String, retry_after: Option<Duration> },
    Fatal(String),
}

fn attempt_request(
    client: &reqwest::blocking::Client,
    spec: &RemoteSpec,
    auth: Option<&str>,
    body: &str,
) -> AttemptOutcome {
    let mut request = client
        .post(&spec.base_url)
        .header("content-type", "application/json")
        .body(body.to_string());
    if let Some(token) = auth {
        request = request.header("authorization", format!("Bearer {token}"));
    }
    match request.send() {
        Err(e) => AttemptOutcome::Retry { error: format!("network error: {e}"), retry_after: None },
        Ok(response) => {
            let status = response.status();
            if status.is_success() {
                match response.text().ok().and_then(|t| serde_json::from_str::<ChatResponse>(&t).ok())
                {
                    Some(parsed) if !parsed.choices.is_empty() => {
                        AttemptOutcome::Ok(parsed.choices[0].message.content.clone())
                    }
                    _ => AttemptOutcome::Fatal("malformed completion response".into()),
                }
            } else if status.as_u16() == 429 || status.is_server_error() {
                let retry_after = response
                    .headers()
                    .get("retry-after")
                    .and_then(|v| v.to_str().ok())
                    .and_then(|v| v.parse::<u64>().ok())
                    .map(Duration::from_secs);
                AttemptOutcome::Retry { error: format!("http {status}"), retry_after }
            } else {
                AttemptOutcome::Fatal(format!("http {status}"))
            }
        }
    }
}

fn backoff_delay(policy: &RetryPolicy, attempt: u32, seed: u64) -> Duration {
    let base = policy.initial_backoff_ms.saturating_mul(1u64 << attempt.min(16));
    let capped = base.min(policy.max_backoff_ms) as f64;
    let mut rng = seeds::rng(seed, &["backoff", &attempt.to_string()]);
    let jitter: f64 = rng.random::<f64>() * policy.jitter;
    Duration::from_millis((capped * (1.0 + jitter)) as u64)
}

pub(super) fn sample_remote(
    spec: &RemoteSpec,
    subject_id: &str,
    prompt: &PromptBundle,
    n: u32,
    seed: u64,
) -> Result<Vec<Transcript>, SampleError> {
    let auth: Option<String> = match &spec.auth_env {
        Some(var) => Some(
            std::env::var(var).map_err(|_| SampleError::AuthMissing(var.clone()))?,
        ),
        None => None,
    };
    let system_text = prompt.system_text();
    // the variant's temperature overrides the endpoint default
    let request = ChatRequest {
        model: &spec.model_name,
        messages: [
            ChatMessage { role: "system", content: &system_text },
            ChatMessage { role: "user", content: &prompt.user_prompt },
        ],
        temperature: prompt.variant.temperature,
        max_tokens: spec.max_tokens,
    };
    let body = serde_json::to_string(&request)
        .map_err(|e| SampleError::InvalidRequest(e.to_string()))?;

    let fingerprint = prompt.fingerprint();
    let variant_id = prompt.variant_id();
    let bucket = spec.rate_limit.map(TokenBucket::new);
    let next_index = AtomicU32::new(0);
    let slots: Mutex<Vec<Option<Transcript>>> = Mutex::new(vec![None; n as usize]);
    let workers = spec.max_parallel.max(1).min(n as usize);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                let client = reqwest::blocking::Client::builder()
                    .timeout(Duration::from_secs(spec.timeout_secs))
                    .build()
                    .expect("client builds");
                loop {
                    let index = next_index.fetch_add(1, Ordering::SeqCst);
                    if index >= n {
                        break;
                    }
                    let request_seed =
                        seeds::derive(seed, &["remote", &fingerprint, &index.to_string()]);
                    let mut retries = 0u32;
                    let mut last_error = String::new();
                    let mut content: Option<String> = None;
                    for attempt in 0..spec.retry.max_attempts {
                        if let Some(bucket) = &bucket {
                            bucket.acquire();
                        }
                        match attempt_request(&client, spec, auth.as_deref(), &body) {
                            AttemptOutcome::Ok(text) => {
                                content = Some(text);
                                break;
                            }
                            AttemptOutcome::Fatal(error) => {
                                last_error = error;
                                break;
                            }
                            AttemptOutcome::Retry { error, retry_after } => {
                                last_error = error;
                                if attempt + 1 < spec.retry.max_attempts {
                                    retries += 1;
                                    let delay = retry_after.unwrap_or_else(|| {
                                        backoff_delay(&spec.retry, attempt, request_seed)
                                    });
                                    std::thread::sleep(delay);
                                }
                            }
                        }
                    }
                    let transcript = Transcript {
                        schema_version: TRANSCRIPT_SCHEMA_VERSION,
                        subject_id: subject_id.to_string(),
                        setting_id: prompt.setting_id.clone(),
                        variant_id: variant_id.clone(),
                        sample_index: index,
                        raw_text: content.clone().unwrap_or_default(),
                        request_fingerprint: fingerprint.clone(),
                        created_at: unix_now(),
                        failed: content.is_none(),
                        error: if content.is_none() { Some(last_error) } else { None },
                        retries,
                        parse: None,
                    };
                    slots.lock().expect("slot lock")[index as usize] = Some(transcript);
                }
            });
        }
    });

    let transcripts: Vec<Transcript> = slots
        .into_inner()
        .expect("slot lock")
        .into_iter()
        .map(|slot| slot.expect("every slot filled"))
        .collect();
    Ok(transcripts)
}
