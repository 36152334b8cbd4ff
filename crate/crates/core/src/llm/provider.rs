use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value};

use super::{LlmError, PromptText};

/// Something that answers prompts.
pub trait LlmProvider {
    fn complete(&mut self, prompt: &PromptText) -> Result<String, LlmError>;

    fn describe(&self) -> String;
}

#[derive(Debug, Deserialize)]
struct FixtureFile {
    scenarios: BTreeMap<String, Scenario>,
}

#[derive(Debug, Deserialize)]
struct Scenario {
    responses: Vec<String>,
}

/// Canned responses, consumed one per call. Once exhausted the last
/// response is repeated.
#[derive(Debug, Clone)]
pub struct FixtureProvider {
    label: String,
    responses: Vec<String>,
    next: usize,
}

impl FixtureProvider {
    pub fn from_responses(label: impl Into<String>, responses: Vec<String>) -> Self {
        Self {
            label: label.into(),
            responses,
            next: 0,
        }
    }

    /// Load `scenario` from a TOML file of the form
    /// `[scenarios.<name>] responses = ["...", ...]`.
    pub fn from_toml(text: &str, scenario: &str) -> Result<Self, LlmError> {
        let mut file: FixtureFile =
            toml::from_str(text).map_err(|e| LlmError::Fixture(e.to_string()))?;
        let s = file
            .scenarios
            .remove(scenario)
            .ok_or_else(|| LlmError::Fixture(format!("no scenario named `{scenario}`")))?;
        if s.responses.is_empty() {
            return Err(LlmError::Fixture(format!("scenario `{scenario}` has no responses")));
        }
        Ok(Self::from_responses(format!("fixture:{scenario}"), s.responses))
    }

    pub fn load(path: impl AsRef<Path>, scenario: &str) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, scenario)
    }
}

impl LlmProvider for FixtureProvider {
    fn complete(&mut self, _prompt: &PromptText) -> Result<String, LlmError> {
        let i = self.next.min(self.responses.len().saturating_sub(1));
        self.next += 1;
        self.responses
            .get(i)
            .cloned()
            .ok_or_else(|| LlmError::Fixture("empty fixture".into()))
    }

    fn describe(&self) -> String {
        self.label.clone()
    }
}

/// Settings for a chat-completion style HTTP endpoint.
#[derive(Debug, Clone, PartialEq, Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
pub struct HttpSettings {
    /// Full URL of the completion endpoint.
    pub endpoint: String,
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    /// Dotted path to the reply text in the response JSON.
    #[serde(default = "default_response_path")]
    pub response_path: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_key_env() -> String {
    "LGTS_LLM_API_KEY".into()
}

fn default_response_path() -> String {
    "choices.0.message.content".into()
}

fn default_timeout() -> u64 {
    60
}

pub struct HttpChatProvider {
    settings: HttpSettings,
    client: reqwest::blocking::Client,
}

impl HttpChatProvider {
    pub fn new(settings: HttpSettings) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(settings.timeout_secs))
            .build()
            .map_err(|e| LlmError::Unavailable(e.to_string()))?;
        Ok(Self { settings, client })
    }
}

/// Follow a dotted path such as `choices.0.message.content`.
pub fn extract_path<'a>(value: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.')
        .filter(|s| !s.is_empty())
        .try_fold(value, |v, key| match key.parse::<usize>() {
            Ok(i) => v.get(i),
            Err(_) => v.get(key),
        })
}

impl LlmProvider for HttpChatProvider {
    fn complete(&mut self, prompt: &PromptText) -> Result<String, LlmError> {
        let body = json!({
            "model": self.settings.model,
            "messages": [{"role": "user", "content": prompt.text}],
            "temperature": self.settings.temperature,
        });
        let mut request = self.client.post(&self.settings.endpoint).json(&body);
        if let Ok(key) = std::env::var(&self.settings.api_key_env) {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| LlmError::Unavailable(e.to_string()))?;
        let value: Value = response
            .json()
            .map_err(|e| LlmError::Unavailable(format!("invalid JSON body: {e}")))?;
        extract_path(&value, &self.settings.response_path)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| {
                LlmError::Unavailable(format!(
                    "response has no string at `{}`",
                    self.settings.response_path
                ))
            })
    }

    fn describe(&self) -> String {
        format!("http:{}@{}", self.settings.model, self.settings.endpoint)
    }
}
