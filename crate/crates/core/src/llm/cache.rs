use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{GenerationRequest, GenerationResponse, LlmError};
use crate::model::fingerprint;

/// Cache key covering the model and every sampling parameter.
pub(crate) fn request_key(model_id: &str, req: &GenerationRequest) -> String {
    let canonical = json!({
        "model": model_id,
        "prompt": req.prompt,
        "temperature": req.temperature,
        "top_p": req.top_p,
        "n": req.n_samples,
        "max_tokens": req.max_tokens,
        "logprobs": req.want_logprobs,
        "top_logprobs": req.top_logprobs_k,
    });
    fingerprint(&canonical.to_string())
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheFile {
    key: String,
    request: GenerationRequest,
    response: GenerationResponse,
}

/// One JSON file per request hash.
#[derive(Debug, Clone)]
pub(crate) struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub(crate) fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub(crate) async fn load(&self, key: &str) -> Result<Option<GenerationResponse>, LlmError> {
        let path = self.path(key);
        let bytes = match tokio::fs::read(&path).await {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(LlmError::Cache(format!("{}: {e}", path.display()))),
        };
        let file: CacheFile = serde_json::from_slice(&bytes)
            .map_err(|e| LlmError::Cache(format!("{}: {e}", path.display())))?;
        Ok(Some(file.response))
    }

    pub(crate) async fn store(
        &self,
        key: &str,
        req: &GenerationRequest,
        resp: &GenerationResponse,
    ) -> Result<(), LlmError> {
        let io = |p: &Path, e: std::io::Error| LlmError::Cache(format!("{}: {e}", p.display()));
        tokio::fs::create_dir_all(&self.dir)
            .await
            .map_err(|e| io(&self.dir, e))?;
        let mut response = resp.clone();
        response.cached = false;
        let file = CacheFile {
            key: key.to_string(),
            request: req.clone(),
            response,
        };
        let body = serde_json::to_vec_pretty(&file).map_err(|e| LlmError::Cache(e.to_string()))?;
        let path = self.path(key);
        let tmp = path.with_extension("json.tmp");
        tokio::fs::write(&tmp, body).await.map_err(|e| io(&tmp, e))?;
        tokio::fs::rename(&tmp, &path).await.map_err(|e| io(&path, e))?;
        Ok(())
    }
}
