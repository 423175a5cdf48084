//! Translator backends: the offline rule-grammar mock and an HTTP client for
//! chat-completion compatible endpoints.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::grammar;
use super::prompt::Prompt;
use super::NluError;

pub const DEFAULT_MODEL: &str = "llama3-8b-8192m";
pub const DEFAULT_ENDPOINT: &str = "https://api.groq.com/openai/v1/chat/completions";
pub const DEFAULT_API_KEY_ENV: &str = "LLM_API_KEY";
pub const ENDPOINT_ENV: &str = "LLM_API_URL";
pub const MODEL_ENV: &str = "LLM_MODEL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Mock,
    Http,
}

impl std::str::FromStr for Backend {
    type Err = NluError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(Backend::Mock),
            "http" => Ok(Backend::Http),
            other => Err(NluError::InvalidConfig(format!(
                "unknown backend {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslatorConfig {
    pub backend: Backend,
    pub endpoint_url: String,
    pub model_name: String,
    pub api_key_env_var: String,
    pub temperature: f64,
    pub timeout_ms: u64,
}

impl Default for TranslatorConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Mock,
            endpoint_url: DEFAULT_ENDPOINT.to_string(),
            model_name: DEFAULT_MODEL.to_string(),
            api_key_env_var: DEFAULT_API_KEY_ENV.to_string(),
            temperature: 0.0,
            timeout_ms: 10_000,
        }
    }
}

impl TranslatorConfig {
    pub fn mock() -> Self {
        Self::default()
    }

    /// Defaults with `LLM_API_URL` / `LLM_MODEL` overrides applied.
    pub fn from_env(backend: Backend) -> Self {
        let mut config = Self {
            backend,
            ..Self::default()
        };
        if let Ok(url) = std::env::var(ENDPOINT_ENV) {
            if !url.trim().is_empty() {
                config.endpoint_url = url;
            }
        }
        if let Ok(model) = std::env::var(MODEL_ENV) {
            if !model.trim().is_empty() {
                config.model_name = model;
            }
        }
        config
    }

    pub fn validate(&self) -> Result<(), NluError> {
        if self.temperature != 0.0 {
            return Err(NluError::InvalidConfig("temperature must be 0.0".into()));
        }
        if !(500..=60_000).contains(&self.timeout_ms) {
            return Err(NluError::InvalidConfig(format!(
                "timeout must be within [500, 60000] ms, got {}",
                self.timeout_ms
            )));
        }
        if self.backend == Backend::Http && self.endpoint_url.trim().is_empty() {
            return Err(NluError::InvalidConfig(
                "http backend needs an endpoint url".into(),
            ));
        }
        Ok(())
    }
}

/// Anything that turns a prompt into a raw text completion.
pub trait Translator: Send + Sync {
    fn complete(&self, prompt: &Prompt) -> Result<String, NluError>;
}

/// Offline translator: applies the rule grammar to the user message.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockTranslator;

impl Translator for MockTranslator {
    fn complete(&self, prompt: &Prompt) -> Result<String, NluError> {
        Ok(grammar::directive_for(&prompt.user))
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: [ChatMessage<'a>; 2],
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    #[serde(default)]
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

/// Blocking chat-completion client with a global request timeout.
pub struct HttpTranslator {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    api_key: String,
}

impl std::fmt::Debug for HttpTranslator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpTranslator")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .finish_non_exhaustive()
    }
}

impl HttpTranslator {
    /// Reads the API key from the configured environment variable.
    pub fn from_config(config: &TranslatorConfig) -> Result<Self, NluError> {
        let key = std::env::var(&config.api_key_env_var)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| NluError::MissingApiKey(config.api_key_env_var.clone()))?;
        Self::with_key(config, key)
    }

    pub fn with_key(
        config: &TranslatorConfig,
        api_key: impl Into<String>,
    ) -> Result<Self, NluError> {
        config.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Ok(Self {
            agent,
            endpoint: config.endpoint_url.clone(),
            model: config.model_name.clone(),
            api_key: api_key.into(),
        })
    }
}

fn map_transport(err: ureq::Error) -> NluError {
    match err {
        ureq::Error::Timeout(_) => NluError::TranslatorTimeout,
        ureq::Error::Io(ref io) if io.kind() == std::io::ErrorKind::TimedOut => {
            NluError::TranslatorTimeout
        }
        ureq::Error::StatusCode(code) => NluError::TranslatorHttpError {
            status: Some(code),
            message: format!("status {code}"),
        },
        other => NluError::TranslatorHttpError {
            status: None,
            message: other.to_string(),
        },
    }
}

impl Translator for HttpTranslator {
    fn complete(&self, prompt: &Prompt) -> Result<String, NluError> {
        let body = ChatRequest {
            model: &self.model,
            temperature: 0.0,
            messages: [
                ChatMessage {
                    role: "system",
                    content: &prompt.system,
                },
                ChatMessage {
                    role: "user",
                    content: &prompt.user,
                },
            ],
        };
        let mut response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(map_transport)?;
        let status = response.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(NluError::TranslatorHttpError {
                status: Some(status),
                message: format!("endpoint returned status {status}"),
            });
        }
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(map_transport)?;
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| NluError::MalformedCompletion(e.to_string()))?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .unwrap_or_default();
        if content.trim().is_empty() {
            return Err(NluError::MalformedCompletion("empty completion".into()));
        }
        Ok(content)
    }
}

/// Builds the configured backend.
pub fn translator_from_config(config: &TranslatorConfig) -> Result<Box<dyn Translator>, NluError> {
    config.validate()?;
    Ok(match config.backend {
        Backend::Mock => Box::new(MockTranslator),
        Backend::Http => Box::new(HttpTranslator::from_config(config)?),
    })
}

/// One-shot translation with the backend described by `config`.
pub fn translate(prompt: &Prompt, config: &TranslatorConfig) -> Result<String, NluError> {
    translator_from_config(config)?.complete(prompt)
}
