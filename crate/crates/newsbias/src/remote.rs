//! Chat-completion stance classifier over HTTP.
//!
//! Request: `POST <endpoint>` with `Authorization: Bearer <key>` and
//! ```json
//! {"model": "...", "temperature": 0, "max_tokens": 5,
//!  "messages": [{"role": "user", "content": "<rendered prompt>"}]}
//! ```
//! Response: the verdict text is read from `choices[0].message.content`.
//!
//! Transport failures, 429 and 5xx are retried with exponential backoff
//! (a `Retry-After` header in seconds takes precedence, capped at the
//! configured maximum). Any other non-success status fails at once.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use newsbias_core::stance::{ClassifierError, StanceClassifier, StancePrompt, VerdictSource};
use serde_json::{json, Value};

use crate::config::ClassifierConfig;

#[derive(Debug)]
pub struct RemoteClassifier {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    api_key: String,
    max_retries: u32,
    backoff_initial: Duration,
    backoff_max: Duration,
    requests: AtomicU64,
}

impl RemoteClassifier {
    pub fn new(config: &ClassifierConfig, api_key: String) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteClassifier {
            agent,
            endpoint: config.endpoint.clone(),
            model: config.model.clone(),
            api_key,
            max_retries: config.max_retries,
            backoff_initial: Duration::from_millis(config.backoff_initial_ms),
            backoff_max: Duration::from_millis(config.backoff_max_ms),
            requests: AtomicU64::new(0),
        }
    }

    /// HTTP requests sent so far, retries included.
    pub fn requests(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt.min(20)).unwrap_or(u32::MAX);
        self.backoff_initial.saturating_mul(factor).min(self.backoff_max)
    }

    fn request_body(&self, prompt: &StancePrompt<'_>) -> Value {
        json!({
            "model": self.model,
            "temperature": 0,
            "max_tokens": 5,
            "messages": [{"role": "user", "content": prompt.render()}],
        })
    }
}

enum Attempt {
    Done(String),
    Retry(String, Option<Duration>),
    Fatal(String),
}

impl RemoteClassifier {
    fn attempt(&self, body: &Value) -> Attempt {
        self.requests.fetch_add(1, Ordering::Relaxed);
        let sent = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body);
        let mut response = match sent {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string(), None),
        };
        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            let retry_after = response
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            return Attempt::Retry(format!("HTTP {status}"), retry_after);
        }
        if !(200..300).contains(&status) {
            let text = response.body_mut().read_to_string().unwrap_or_default();
            return Attempt::Fatal(format!("HTTP {status}: {}", text.chars().take(200).collect::<String>()));
        }
        match response.body_mut().read_json::<Value>() {
            Ok(v) => match v.pointer("/choices/0/message/content").and_then(Value::as_str) {
                Some(content) => Attempt::Done(content.to_string()),
                // An answer without content is handed back as an unreadable
                // reply so the reprompt logic applies.
                None => Attempt::Done(String::new()),
            },
            Err(e) => Attempt::Retry(format!("reading response: {e}"), None),
        }
    }
}

impl StanceClassifier for RemoteClassifier {
    fn classifier_id(&self) -> String {
        format!("remote:{}", self.model)
    }

    fn source(&self) -> VerdictSource {
        VerdictSource::Remote
    }

    fn respond(&self, prompt: &StancePrompt<'_>) -> Result<String, ClassifierError> {
        let body = self.request_body(prompt);
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fatal(msg) => return Err(ClassifierError::Transport(msg)),
                Attempt::Retry(msg, hint) => {
                    if attempt >= self.max_retries {
                        return Err(ClassifierError::Transport(format!(
                            "{msg} (gave up after {} attempts)",
                            attempt + 1
                        )));
                    }
                    let wait = hint.map_or_else(|| self.backoff(attempt), |d| d.min(self.backoff_max));
                    log::debug!("stance request failed ({msg}); retrying in {wait:?}");
                    std::thread::sleep(wait);
                    attempt += 1;
                }
            }
        }
    }
}
