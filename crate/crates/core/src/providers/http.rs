use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{FetchOptions, ModelSpec};
use crate::error::{Error, Result};

/// Something that turns a batch of strings into vectors, in input order.
pub trait EmbeddingBackend: Sync {
    fn provider_name(&self) -> &str;
    fn embed_batch(&self, inputs: &[String]) -> Result<Vec<Vec<f64>>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: usize,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based): doubles each time.
    pub fn backoff(&self, retry: usize) -> Duration {
        self.initial_backoff * 2u32.saturating_pow(retry as u32)
    }
}

#[derive(Serialize)]
struct EmbeddingRequest<'a> {
    model: &'a str,
    input: &'a [String],
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    index: usize,
    embedding: Vec<f64>,
}

enum Attempt {
    Retryable(String),
    Fatal(Error),
}

/// Client for an OpenAI-compatible embeddings endpoint.
pub struct OpenAiClient {
    endpoint: String,
    api_model: String,
    api_key: Option<String>,
    retry: RetryPolicy,
    agent: ureq::Agent,
}

impl OpenAiClient {
    pub fn new(
        endpoint: &str,
        api_model: &str,
        api_key: Option<String>,
        retry: RetryPolicy,
        timeout: Duration,
    ) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        OpenAiClient {
            endpoint: endpoint.to_owned(),
            api_model: api_model.to_owned(),
            api_key,
            retry,
            agent,
        }
    }

    pub fn from_spec(spec: &ModelSpec, options: &FetchOptions) -> Result<Self> {
        let endpoint = spec
            .endpoint
            .as_deref()
            .ok_or_else(|| Error::Config(format!("model '{}' has no endpoint", spec.model_id)))?;
        let api_key = match &spec.auth_env_var {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                Error::Config(format!(
                    "model '{}': credential variable {var} is not set",
                    spec.model_id
                ))
            })?),
            None => None,
        };
        Ok(OpenAiClient::new(
            endpoint,
            spec.api_model(),
            api_key,
            options.retry,
            options.timeout,
        ))
    }

    fn attempt(&self, inputs: &[String]) -> std::result::Result<Vec<Vec<f64>>, Attempt> {
        let mut request = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(EmbeddingRequest {
                model: &self.api_model,
                input: inputs,
            })
            .map_err(|e| Attempt::Retryable(e.to_string()))?;
        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(Attempt::Retryable(format!("HTTP {status}")));
        }
        if !(200..300).contains(&status) {
            let body = response.body_mut().read_to_string().unwrap_or_default();
            return Err(Attempt::Fatal(Error::Http {
                attempts: 1,
                message: format!(
                    "HTTP {status}: {}",
                    body.chars().take(300).collect::<String>()
                ),
            }));
        }
        let parsed: EmbeddingResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| Attempt::Retryable(format!("invalid response body: {e}")))?;
        reorder(parsed.data, inputs.len()).map_err(Attempt::Fatal)
    }
}

/// Places each returned vector at its `index`.
fn reorder(data: Vec<EmbeddingDatum>, requested: usize) -> Result<Vec<Vec<f64>>> {
    let returned = data.len();
    let mut slots: Vec<Option<Vec<f64>>> = vec![None; requested];
    for datum in data {
        match slots.get_mut(datum.index) {
            Some(slot @ None) => *slot = Some(datum.embedding),
            _ => {
                return Err(Error::IncompleteBatch {
                    requested,
                    returned,
                })
            }
        }
    }
    slots
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or(Error::IncompleteBatch {
            requested,
            returned,
        })
}

impl EmbeddingBackend for OpenAiClient {
    fn provider_name(&self) -> &str {
        &self.endpoint
    }

    fn embed_batch(&self, inputs: &[String]) -> Result<Vec<Vec<f64>>> {
        let attempts = self.retry.attempts.max(1);
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.retry.backoff(attempt - 1));
            }
            match self.attempt(inputs) {
                Ok(vectors) => return Ok(vectors),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retryable(msg)) => last = msg,
            }
        }
        Err(Error::Http {
            attempts,
            message: last,
        })
    }
}
