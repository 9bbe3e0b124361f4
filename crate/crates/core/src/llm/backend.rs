use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tracing::{debug, warn};

use super::cache::{request_key, DiskCache};
use super::{GenerationRequest, GenerationResponse, LlmBackend, LlmError, Provider, ProviderError};
use crate::flight::SingleFlight;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
    /// Relative jitter applied to each delay, in [0, 1].
    pub jitter: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            backoff_base_ms: 500,
            backoff_max_ms: 30_000,
            jitter: 0.2,
        }
    }
}

impl RetryPolicy {
    /// No waiting between attempts; for tests.
    pub fn immediate(max_attempts: u32) -> Self {
        Self {
            max_attempts,
            backoff_base_ms: 0,
            backoff_max_ms: 0,
            jitter: 0.0,
        }
    }

    /// Delay before attempt `attempt + 1`, given a uniform sample in [-1, 1].
    pub fn delay(&self, attempt: u32, unit_noise: f64) -> Duration {
        let exp = self
            .backoff_base_ms
            .saturating_mul(1u64 << (attempt.saturating_sub(1)).min(20));
        let capped = exp.min(self.backoff_max_ms) as f64;
        let jittered = capped * (1.0 + self.jitter * unit_noise.clamp(-1.0, 1.0));
        Duration::from_millis(jittered.max(0.0).round() as u64)
    }

    fn validate(&self) -> Result<(), LlmError> {
        if self.max_attempts == 0 {
            return Err(LlmError::Config("retry.max_attempts must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.jitter) {
            return Err(LlmError::Config("retry.jitter must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Connection and client-behavior settings. Secrets are never stored here,
/// only the name of the environment variable holding them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub base_url: String,
    pub model: String,
    pub api_key_env: Option<String>,
    pub max_concurrency: usize,
    pub retry: RetryPolicy,
    pub cache_dir: Option<PathBuf>,
    pub timeout_secs: u64,
    /// Seeds retry jitter.
    pub seed: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4-0613".into(),
            api_key_env: Some("OPENAI_API_KEY".into()),
            max_concurrency: 4,
            retry: RetryPolicy::default(),
            cache_dir: None,
            timeout_secs: 60,
            seed: 0,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.max_concurrency == 0 {
            return Err(LlmError::Config("max_concurrency must be >= 1".into()));
        }
        if self.timeout_secs == 0 {
            return Err(LlmError::Config("timeout_secs must be >= 1".into()));
        }
        self.retry.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BackendStats {
    /// Attempts that reached the provider, including failed ones.
    pub provider_calls: u64,
    /// Failed attempts that were retried or exhausted the policy.
    pub retried_failures: u64,
    pub cache_hits: u64,
}

/// A provider behind a response cache, a retry policy and a concurrency bound.
pub struct Backend {
    provider: Arc<dyn Provider>,
    retry: RetryPolicy,
    permits: Semaphore,
    memory: SingleFlight<(GenerationResponse, bool)>,
    disk: Option<DiskCache>,
    rng: Mutex<StdRng>,
    provider_calls: AtomicU64,
    retried_failures: AtomicU64,
    cache_hits: AtomicU64,
}

impl Backend {
    pub fn new(provider: Arc<dyn Provider>, config: &BackendConfig) -> Result<Self, LlmError> {
        config.validate()?;
        Ok(Self {
            provider,
            retry: config.retry.clone(),
            permits: Semaphore::new(config.max_concurrency),
            memory: SingleFlight::default(),
            disk: config.cache_dir.as_ref().map(DiskCache::new),
            rng: Mutex::new(StdRng::seed_from_u64(config.seed)),
            provider_calls: AtomicU64::new(0),
            retried_failures: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
        })
    }

    pub fn stats(&self) -> BackendStats {
        BackendStats {
            provider_calls: self.provider_calls.load(Ordering::SeqCst),
            retried_failures: self.retried_failures.load(Ordering::SeqCst),
            cache_hits: self.cache_hits.load(Ordering::SeqCst),
        }
    }

    async fn call_with_retry(&self, req: &GenerationRequest) -> Result<GenerationResponse, LlmError> {
        let mut log = Vec::new();
        for attempt in 1..=self.retry.max_attempts {
            let outcome = {
                let _permit = self.permits.acquire().await.expect("semaphore closed");
                self.provider_calls.fetch_add(1, Ordering::SeqCst);
                self.provider.complete(req).await
            };
            match outcome {
                Ok(mut resp) => {
                    if resp.completions.len() != req.n_samples as usize {
                        return Err(LlmError::Protocol {
                            message: format!(
                                "expected {} completions, provider returned {}",
                                req.n_samples,
                                resp.completions.len()
                            ),
                            excerpt: String::new(),
                        });
                    }
                    resp.cached = false;
                    return Ok(resp);
                }
                Err(e) if e.is_retryable() => {
                    self.retried_failures.fetch_add(1, Ordering::SeqCst);
                    warn!(attempt, error = %e, "retryable provider failure");
                    log.push(format!("attempt {attempt}: {e}"));
                    if attempt < self.retry.max_attempts {
                        let noise = self.rng.lock().expect("rng poisoned").gen_range(-1.0..=1.0);
                        tokio::time::sleep(self.retry.delay(attempt, noise)).await;
                    }
                }
                Err(e) => return Err(classify(e)),
            }
        }
        Err(LlmError::Transport { attempts: log })
    }
}

fn classify(e: ProviderError) -> LlmError {
    match e {
        ProviderError::Credential(msg) => LlmError::Credential(msg),
        ProviderError::Protocol { message, excerpt } => LlmError::Protocol { message, excerpt },
        ProviderError::ScriptedMiss { fingerprint } => LlmError::ScriptedMiss { fingerprint },
        other => LlmError::Transport {
            attempts: vec![format!("attempt 1: {other}")],
        },
    }
}

#[async_trait]
impl LlmBackend for Backend {
    fn model_id(&self) -> &str {
        self.provider.model_id()
    }

    async fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, LlmError> {
        req.validate()?;
        let key = request_key(self.model_id(), req);
        let ((mut resp, from_disk), ran) = self
            .memory
            .get_or_try_init(&key, || async {
                if let Some(disk) = &self.disk {
                    if let Some(resp) = disk.load(&key).await? {
                        return Ok((resp, true));
                    }
                }
                let resp = self.call_with_retry(req).await?;
                if let Some(disk) = &self.disk {
                    disk.store(&key, req, &resp).await?;
                }
                Ok::<_, LlmError>((resp, false))
            })
            .await?;
        resp.cached = !ran || from_disk;
        if resp.cached {
            self.cache_hits.fetch_add(1, Ordering::SeqCst);
            debug!(key = %key, "response cache hit");
        }
        Ok(resp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_grows_and_caps() {
        let policy = RetryPolicy {
            max_attempts: 5,
            backoff_base_ms: 100,
            backoff_max_ms: 350,
            jitter: 0.0,
        };
        assert_eq!(policy.delay(1, 0.0), Duration::from_millis(100));
        assert_eq!(policy.delay(2, 0.0), Duration::from_millis(200));
        assert_eq!(policy.delay(3, 0.0), Duration::from_millis(350));
    }

    #[test]
    fn jitter_bounds() {
        let policy = RetryPolicy {
            jitter: 0.5,
            ..RetryPolicy::default()
        };
        assert_eq!(policy.delay(1, 1.0), Duration::from_millis(750));
        assert_eq!(policy.delay(1, -1.0), Duration::from_millis(250));
    }

    #[test]
    fn config_rejects_zero_concurrency() {
        let config = BackendConfig {
            max_concurrency: 0,
            ..BackendConfig::default()
        };
        assert!(config.validate().is_err());
        let config = BackendConfig {
            retry: RetryPolicy::immediate(0),
            ..BackendConfig::default()
        };
        assert!(config.validate().is_err());
    }
}
