//! Backend for OpenAI-compatible chat-completion endpoints.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Backend, OracleError, QueryKind, Request};

fn default_retries() -> u32 {
    2
}

fn default_timeout() -> u64 {
    60
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    /// Must be 0; kept in the config so the value is explicit.
    #[serde(default)]
    pub temperature: f64,
    /// Transport retries after the first attempt.
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    /// Replacement system prompts per query kind.
    #[serde(default)]
    pub system_prompts: BTreeMap<QueryKind, String>,
}

impl LlmConfig {
    pub fn check(&self) -> Result<(), String> {
        if self.temperature != 0.0 {
            return Err(format!("temperature must be 0, got {}", self.temperature));
        }
        if self.max_retries > 10 {
            return Err("max_retries must be at most 10".into());
        }
        if self.endpoint.is_empty() || self.model.is_empty() || self.api_key_env.is_empty() {
            return Err("endpoint, model and api_key_env are required".into());
        }
        Ok(())
    }
}

pub struct LlmBackend {
    config: LlmConfig,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl LlmBackend {
    /// Reads the API key from the configured environment variable.
    pub fn new(config: LlmConfig) -> Result<Self, OracleError> {
        config.check().map_err(OracleError::Unavailable)?;
        let api_key = std::env::var(&config.api_key_env).map_err(|_| {
            OracleError::Unavailable(format!(
                "environment variable {} is not set",
                config.api_key_env
            ))
        })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| OracleError::Unavailable(e.to_string()))?;
        Ok(LlmBackend {
            config,
            api_key,
            client,
        })
    }

    pub fn request_body(&self, request: &Request) -> Value {
        let system = self
            .config
            .system_prompts
            .get(&request.kind)
            .unwrap_or(&request.system);
        json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": request.user},
            ],
            "response_format": {
                "type": "json_schema",
                "json_schema": {
                    "name": request.kind.name(),
                    "strict": true,
                    "schema": request.schema,
                },
            },
        })
    }

    fn send(&self, body: &Value) -> Result<Value, (bool, String)> {
        let response = self
            .client
            .post(&self.config.endpoint)
            .bearer_auth(&self.api_key)
            .json(body)
            .send()
            .map_err(|e| (true, e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            let retry = status.is_server_error() || status.as_u16() == 429;
            return Err((retry, format!("HTTP {status}")));
        }
        response.json::<Value>().map_err(|e| (true, e.to_string()))
    }
}

impl Backend for LlmBackend {
    /// The message content is returned as parsed JSON when possible and as a
    /// JSON string otherwise, so that the caller's schema check rejects it.
    fn answer(&self, request: &Request) -> Result<Value, OracleError> {
        let body = self.request_body(request);
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(250 << attempt.min(5)));
            }
            match self.send(&body) {
                Ok(reply) => {
                    let content = reply["choices"][0]["message"]["content"]
                        .as_str()
                        .ok_or_else(|| OracleError::Malformed {
                            key: request.key.clone(),
                            message: "reply has no message content".into(),
                        })?;
                    return Ok(serde_json::from_str(content)
                        .unwrap_or_else(|_| Value::String(content.to_string())));
                }
                Err((retry, msg)) => {
                    log::warn!("chat request for {} failed: {msg}", request.key);
                    last = msg;
                    if !retry {
                        break;
                    }
                }
            }
        }
        Err(OracleError::Unavailable(last))
    }
}
