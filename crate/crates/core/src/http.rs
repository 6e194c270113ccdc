//! Minimal blocking JSON-over-HTTP client with bounded retries.

use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_millis(250),
            timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Clone)]
pub struct JsonClient {
    base: String,
    agent: ureq::Agent,
    retry: RetryPolicy,
}

impl std::fmt::Debug for JsonClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JsonClient")
            .field("base", &self.base)
            .field("retry", &self.retry)
            .finish()
    }
}

impl JsonClient {
    pub fn new(endpoint: &str, retry: RetryPolicy) -> Result<Self> {
        if !(endpoint.starts_with("http://") || endpoint.starts_with("https://")) {
            return Err(Error::Config(format!(
                "endpoint {endpoint:?} must start with http:// or https://"
            )));
        }
        if retry.attempts == 0 {
            return Err(Error::Config("retry attempts must be >= 1".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(retry.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(JsonClient {
            base: endpoint.trim_end_matches('/').to_owned(),
            agent,
            retry,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.base
    }

    /// POSTs `body` to `path`, retrying transport failures and 5xx answers
    /// with exponential backoff. 4xx answers and undecodable bodies fail at once.
    pub fn post<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, body: &Req) -> Result<Resp> {
        let url = format!("{}{}", self.base, path);
        let payload = serde_json::to_string(body).expect("request serializes");
        let mut backoff = self.retry.initial_backoff;
        let mut last = String::new();
        for attempt in 1..=self.retry.attempts {
            match self.try_once(&url, &payload) {
                Ok(Outcome::Done(text)) => {
                    return serde_json::from_str(&text).map_err(|e| Error::MalformedResponse {
                        endpoint: url.clone(),
                        message: e.to_string(),
                    })
                }
                Ok(Outcome::Rejected(status, body)) => {
                    return Err(Error::Protocol {
                        endpoint: url,
                        status,
                        body,
                    })
                }
                Ok(Outcome::Retry(msg)) | Err(msg) => {
                    log::debug!("{url}: attempt {attempt} failed: {msg}");
                    last = msg;
                }
            }
            if attempt < self.retry.attempts {
                thread::sleep(backoff);
                backoff *= 2;
            }
        }
        Err(Error::Transport {
            endpoint: url,
            attempts: self.retry.attempts,
            message: last,
        })
    }

    fn try_once(&self, url: &str, payload: &str) -> std::result::Result<Outcome, String> {
        let mut resp = self
            .agent
            .post(url)
            .header("content-type", "application/json")
            .send(payload)
            .map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| e.to_string())?;
        Ok(match status {
            200..=299 => Outcome::Done(text),
            500..=599 => Outcome::Retry(format!("HTTP {status}: {text}")),
            _ => Outcome::Rejected(status, text),
        })
    }
}

enum Outcome {
    Done(String),
    Retry(String),
    Rejected(u16, String),
}
