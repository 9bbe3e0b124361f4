//! OpenAI-compatible `/chat/completions` provider.

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{
    BackendConfig, GenerationRequest, GenerationResponse, LlmError, Provider, ProviderError,
    TokenAlternative, TokenLogprob,
};

const EXCERPT_LEN: usize = 300;

pub struct HttpProvider {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    client: reqwest::Client,
}

impl HttpProvider {
    /// Reads the bearer token from the configured environment variable.
    pub fn from_config(config: &BackendConfig) -> Result<Self, LlmError> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                LlmError::Credential(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(Self {
            endpoint: format!("{}/chat/completions", config.base_url.trim_end_matches('/')),
            model: config.model.clone(),
            api_key,
            client,
        })
    }
}

#[derive(Debug, Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    top_p: f64,
    n: u32,
    max_tokens: u32,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    logprobs: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    top_logprobs: Option<u32>,
}

#[derive(Debug, Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    #[serde(default)]
    model: Option<String>,
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    #[serde(default)]
    index: u32,
    message: Message,
    #[serde(default)]
    logprobs: Option<ChoiceLogprobs>,
}

#[derive(Debug, Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ChoiceLogprobs {
    #[serde(default)]
    content: Option<Vec<WireToken>>,
}

#[derive(Debug, Deserialize)]
struct WireToken {
    token: String,
    logprob: f64,
    #[serde(default)]
    top_logprobs: Vec<WireAlternative>,
}

#[derive(Debug, Deserialize)]
struct WireAlternative {
    token: String,
    logprob: f64,
}

fn excerpt(body: &str) -> String {
    body.chars().take(EXCERPT_LEN).collect()
}

/// Converts a provider JSON body into a response.
fn parse_body(body: &str, fallback_model: &str) -> Result<GenerationResponse, ProviderError> {
    let mut parsed: ChatResponse = serde_json::from_str(body).map_err(|e| ProviderError::Protocol {
        message: e.to_string(),
        excerpt: excerpt(body),
    })?;
    parsed.choices.sort_by_key(|c| c.index);
    let mut completions = Vec::with_capacity(parsed.choices.len());
    let mut tables = Vec::with_capacity(parsed.choices.len());
    let mut all_have_logprobs = !parsed.choices.is_empty();
    for choice in parsed.choices {
        completions.push(choice.message.content.unwrap_or_default());
        match choice.logprobs.and_then(|l| l.content) {
            Some(tokens) => tables.push(
                tokens
                    .into_iter()
                    .map(|t| TokenLogprob {
                        token: t.token,
                        logprob: t.logprob,
                        top_logprobs: t
                            .top_logprobs
                            .into_iter()
                            .map(|a| TokenAlternative {
                                token: a.token,
                                logprob: a.logprob,
                            })
                            .collect(),
                    })
                    .collect(),
            ),
            None => all_have_logprobs = false,
        }
    }
    Ok(GenerationResponse {
        completions,
        token_logprobs: all_have_logprobs.then_some(tables),
        model_id: parsed.model.unwrap_or_else(|| fallback_model.to_string()),
        cached: false,
    })
}

#[async_trait]
impl Provider for HttpProvider {
    fn model_id(&self) -> &str {
        &self.model
    }

    async fn complete(&self, req: &GenerationRequest) -> Result<GenerationResponse, ProviderError> {
        let body = ChatRequest {
            model: &self.model,
            messages: [ChatMessage {
                role: "user",
                content: &req.prompt,
            }],
            temperature: req.temperature,
            top_p: req.top_p,
            n: req.n_samples,
            max_tokens: req.max_tokens,
            logprobs: req.want_logprobs,
            top_logprobs: req.want_logprobs.then_some(req.top_logprobs_k),
        };
        let mut builder = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let resp = builder.send().await.map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::Connect(e.to_string())
            }
        })?;
        let status = resp.status().as_u16();
        let text = resp.text().await.map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::Connect(e.to_string())
            }
        })?;
        match status {
            200..=299 => {
                let mut parsed = parse_body(&text, &self.model)?;
                // Report the configured model so cache keys and results agree.
                parsed.model_id = self.model.clone();
                Ok(parsed)
            }
            401 | 403 => Err(ProviderError::Credential(format!(
                "HTTP {status}: {}",
                excerpt(&text)
            ))),
            _ => Err(ProviderError::Http {
                status,
                body: excerpt(&text),
            }),
        }
    }
}
