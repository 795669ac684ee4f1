//! OpenAI-compatible chat-completions client.

use std::time::Duration;

use serde_json::{json, Value};
use trates_core::llm::{CompletionRequest, Gateway, LlmError};

pub const URL_VAR: &str = "TRATES_LLM_URL";
pub const KEY_VAR: &str = "TRATES_LLM_API_KEY";

#[derive(Debug, Clone)]
pub struct HttpConfig {
    /// Full chat-completions URL.
    pub url: String,
    pub api_key: Option<String>,
    /// Retries after the first attempt.
    pub max_retries: u32,
    /// Delay before the first retry; doubles after each one.
    pub backoff: Duration,
    pub timeout: Duration,
}

impl HttpConfig {
    /// Endpoint and key from the environment. A base URL gets `/chat/completions` appended.
    pub fn from_env(max_retries: u32, backoff: Duration, timeout: Duration) -> Result<Self, LlmError> {
        let url = std::env::var(URL_VAR)
            .map_err(|_| LlmError::InvalidRequest(format!("set {URL_VAR} to the chat-completions endpoint")))?;
        Ok(HttpConfig {
            url: endpoint(&url),
            api_key: std::env::var(KEY_VAR).ok().filter(|k| !k.is_empty()),
            max_retries,
            backoff,
            timeout,
        })
    }
}

pub fn endpoint(url: &str) -> String {
    let url = url.trim_end_matches('/');
    if url.ends_with("/chat/completions") {
        url.to_string()
    } else {
        format!("{url}/chat/completions")
    }
}

pub struct HttpGateway {
    config: HttpConfig,
    agent: ureq::Agent,
}

enum Failure {
    Retry(String),
    Fatal(LlmError),
}

impl HttpGateway {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpGateway { config, agent }
    }

    fn body(request: &CompletionRequest) -> Value {
        json!({
            "model": request.model_id,
            "messages": [
                {"role": "system", "content": request.instruction},
                {"role": "user", "content": request.user_content},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        })
    }

    fn attempt(&self, body: &Value) -> Result<String, Failure> {
        let mut req = self.agent.post(&self.config.url).header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| Failure::Retry(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| Failure::Retry(e.to_string()))?;
        if status == 429 || status >= 500 {
            return Err(Failure::Retry(format!("status {status}: {text}")));
        }
        if !(200..300).contains(&status) {
            return Err(Failure::Fatal(LlmError::Status { status, body: text }));
        }
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::Fatal(LlmError::Other(format!("malformed response body: {e}"))))?;
        let content = v["choices"][0]["message"]["content"].as_str().unwrap_or("");
        if content.trim().is_empty() {
            return Err(Failure::Fatal(LlmError::EmptyResponse));
        }
        Ok(content.to_string())
    }
}

impl Gateway for HttpGateway {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        request.validate()?;
        let body = Self::body(request);
        let mut delay = self.config.backoff;
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry(message)) => {
                    if attempts > self.config.max_retries {
                        return Err(LlmError::Transport { attempts, message });
                    }
                    log::warn!("attempt {attempts} failed ({message}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                    delay *= 2;
                }
            }
        }
    }
}
