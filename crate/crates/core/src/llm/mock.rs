//! Scripted provider for offline, exact-value runs.
//!
//! Completions are looked up by the fingerprint of the prompt. A request for
//! more samples than the entry holds cycles through the entry from the start.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{
    Backend, BackendConfig, GenerationRequest, GenerationResponse, LlmError, Provider,
    ProviderError, RetryPolicy, TokenLogprob,
};
use crate::model::fingerprint;

/// Script key that answers any prompt without its own entry.
pub const SCRIPT_FALLBACK_KEY: &str = "*";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub completions: Vec<String>,
    /// Optional per-completion token table, aligned with `completions`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_logprobs: Option<Vec<Vec<TokenLogprob>>>,
}

impl ScriptEntry {
    pub fn texts<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            completions: texts.into_iter().map(Into::into).collect(),
            token_logprobs: None,
        }
    }
}

/// Prompt fingerprint → scripted completions.
pub type Script = HashMap<String, ScriptEntry>;

pub struct ScriptedProvider {
    model_id: String,
    script: Script,
    calls: AtomicUsize,
    failures_left: AtomicUsize,
    failure: Mutex<Option<ProviderError>>,
    latency: Option<Duration>,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
}

impl ScriptedProvider {
    pub fn new(script: Script) -> Result<Self, LlmError> {
        if script.is_empty() {
            return Err(LlmError::Script("script is empty".into()));
        }
        if let Some((key, _)) = script.iter().find(|(_, e)| e.completions.is_empty()) {
            return Err(LlmError::Script(format!("entry {key} has no completions")));
        }
        for (key, entry) in &script {
            if let Some(table) = &entry.token_logprobs {
                if table.len() != entry.completions.len() {
                    return Err(LlmError::Script(format!(
                        "entry {key}: {} token tables for {} completions",
                        table.len(),
                        entry.completions.len()
                    )));
                }
            }
        }
        Ok(Self {
            model_id: "scripted-mock".into(),
            script,
            calls: AtomicUsize::new(0),
            failures_left: AtomicUsize::new(0),
            failure: Mutex::new(None),
            latency: None,
            in_flight: AtomicUsize::new(0),
            max_in_flight: AtomicUsize::new(0),
        })
    }

    /// Reads a JSON object of fingerprint → entry.
    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::Script(format!("{}: {e}", path.display())))?;
        let script: Script = serde_json::from_str(&text)
            .map_err(|e| LlmError::Script(format!("{}: {e}", path.display())))?;
        Self::new(script)
    }

    pub fn with_model_id(mut self, model_id: impl Into<String>) -> Self {
        self.model_id = model_id.into();
        self
    }

    /// The first `count` calls fail with `error` before the script is consulted.
    pub fn with_failures(self, count: usize, error: ProviderError) -> Self {
        self.failures_left.store(count, Ordering::SeqCst);
        *self.failure.lock().expect("failure slot poisoned") = Some(error);
        self
    }

    /// Every call holds for `latency` before answering.
    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.latency = Some(latency);
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Highest number of calls observed in progress at once.
    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight.load(Ordering::SeqCst)
    }

    fn respond(&self, req: &GenerationRequest) -> Result<GenerationResponse, ProviderError> {
        let failing = self
            .failures_left
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
            .is_ok();
        if failing {
            let failure = self.failure.lock().expect("failure slot poisoned").clone();
            return Err(failure.unwrap_or(ProviderError::Http {
                status: 503,
                body: "scripted failure".into(),
            }));
        }
        let fp = fingerprint(&req.prompt);
        let entry = self
            .script
            .get(&fp)
            .or_else(|| self.script.get(SCRIPT_FALLBACK_KEY))
            .ok_or(ProviderError::ScriptedMiss { fingerprint: fp })?;
        let n = req.n_samples as usize;
        let len = entry.completions.len();
        let completions = (0..n).map(|i| entry.completions[i % len].clone()).collect();
        let token_logprobs = match (&entry.token_logprobs, req.want_logprobs) {
            (Some(table), true) => Some((0..n).map(|i| table[i % len].clone()).collect()),
            _ => None,
        };
        Ok(GenerationResponse {
            completions,
            token_logprobs,
            model_id: self.model_id.clone(),
            cached: false,
        })
    }
}

struct InFlight<'a>(&'a AtomicUsize);

impl Drop for InFlight<'_> {
    fn drop(&mut self) {
        self.0.fetch_sub(1, Ordering::SeqCst);
    }
}

#[async_trait]
impl Provider for ScriptedProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    async fn complete(&self, req: &GenerationRequest) -> Result<GenerationResponse, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        let _guard = InFlight(&self.in_flight);
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        if let Some(latency) = self.latency {
            tokio::time::sleep(latency).await;
        }
        self.respond(req)
    }
}

/// A backend over a scripted provider with in-memory caching and no retry delay.
pub fn mock_from_script(script: Script) -> Result<Backend, LlmError> {
    let provider = Arc::new(ScriptedProvider::new(script)?);
    let config = BackendConfig {
        retry: RetryPolicy::immediate(1),
        cache_dir: None,
        ..BackendConfig::default()
    };
    Backend::new(provider, &config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::LlmBackend;

    fn script(prompt: &str, texts: &[&str]) -> Script {
        Script::from([(fingerprint(prompt), ScriptEntry::texts(texts.iter().copied()))])
    }

    #[tokio::test]
    async fn returns_scripted_text() {
        let backend = mock_from_script(script("p", &["4"])).unwrap();
        let resp = backend.generate(&GenerationRequest::greedy("p")).await.unwrap();
        assert_eq!(resp.completions, vec!["4"]);
        assert!(!resp.cached);
    }

    #[tokio::test]
    async fn repeated_request_is_cached() {
        let backend = mock_from_script(script("p", &["5"])).unwrap();
        let req = GenerationRequest::greedy("p");
        let first = backend.generate(&req).await.unwrap();
        let second = backend.generate(&req).await.unwrap();
        assert!(second.cached);
        assert_eq!(first.completions, second.completions);
        assert_eq!(backend.stats().provider_calls, 1);
        assert_eq!(backend.stats().cache_hits, 1);
    }

    #[tokio::test]
    async fn cycles_when_more_samples_requested() {
        let backend = mock_from_script(script("p", &["1", "2", "3", "4"])).unwrap();
        let mut req = GenerationRequest::greedy("p");
        req.n_samples = 20;
        let resp = backend.generate(&req).await.unwrap();
        assert_eq!(resp.completions.len(), 20);
        let expected: Vec<String> = (0..20).map(|i| ((i % 4) + 1).to_string()).collect();
        assert_eq!(resp.completions, expected);
    }

    #[tokio::test]
    async fn twenty_texts_in_order() {
        let texts: Vec<String> = (0..20).map(|i| format!("r{i}")).collect();
        let script = Script::from([(fingerprint("p"), ScriptEntry::texts(texts.clone()))]);
        let backend = mock_from_script(script).unwrap();
        let mut req = GenerationRequest::greedy("p");
        req.n_samples = 20;
        assert_eq!(backend.generate(&req).await.unwrap().completions, texts);
    }

    #[tokio::test]
    async fn unknown_fingerprint_is_a_miss() {
        let backend = mock_from_script(script("p", &["4"])).unwrap();
        let err = backend.generate(&GenerationRequest::greedy("q")).await.unwrap_err();
        assert_eq!(err, LlmError::ScriptedMiss { fingerprint: fingerprint("q") });
    }

    #[tokio::test]
    async fn fallback_entry_answers_anything() {
        let script = Script::from([(SCRIPT_FALLBACK_KEY.to_string(), ScriptEntry::texts(["3"]))]);
        let backend = mock_from_script(script).unwrap();
        let resp = backend.generate(&GenerationRequest::greedy("anything")).await.unwrap();
        assert_eq!(resp.completions, vec!["3"]);
    }

    #[test]
    fn empty_script_rejected() {
        assert!(ScriptedProvider::new(Script::new()).is_err());
        let bad = Script::from([("k".to_string(), ScriptEntry::texts(Vec::<String>::new()))]);
        assert!(ScriptedProvider::new(bad).is_err());
    }
}
