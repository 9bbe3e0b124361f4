//! Automatic evaluation steps.
//!
//! The model is shown the task introduction and the criterion, followed by an
//! `Evaluation Steps:` cue, and its continuation is split into numbered steps.
//! Steps are generated once per (task, criterion, model) and reused for every
//! record.

use std::path::PathBuf;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{render_criteria, STEPS_HEADING};
use crate::flight::SingleFlight;
use crate::llm::{GenerationRequest, LlmBackend, LlmError, COT_MAX_TOKENS};
use crate::model::{fingerprint, CriterionSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CotError {
    #[error("criterion `{0}` already has evaluation steps")]
    StepsPresent(String),
    #[error(transparent)]
    Backend(#[from] LlmError),
    #[error("could not parse evaluation steps from continuation: {raw:?}")]
    Unparseable { raw: String },
    #[error("cot cache: {0}")]
    Cache(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CotEntry {
    pub key: String,
    pub model_id: String,
    pub criterion: String,
    pub raw_continuation: String,
    pub steps: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CotOutcome {
    pub steps: Vec<String>,
    /// True when no backend request was made for this call.
    pub cached: bool,
}

/// The generation prompt: intro, criteria, and the steps cue.
pub fn cot_prompt(criterion: &CriterionSpec) -> String {
    format!(
        "{}\n\nEvaluation Criteria:\n\n{}\n\n{STEPS_HEADING}\n",
        criterion.task_intro,
        render_criteria(criterion)
    )
}

fn enumerator_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?m)^[ \t]*\d+[.)][ \t]+").expect("valid regex"))
}

/// Splits a continuation on leading `1.`-style enumerators. Text before the
/// first enumerator is dropped. Without enumerators the whole continuation is
/// a single step.
pub fn parse_steps(continuation: &str) -> Vec<String> {
    let squash = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
    let starts: Vec<(usize, usize)> = enumerator_regex()
        .find_iter(continuation)
        .map(|m| (m.start(), m.end()))
        .collect();
    if starts.is_empty() {
        let whole = squash(continuation);
        return if whole.is_empty() { Vec::new() } else { vec![whole] };
    }
    starts
        .iter()
        .enumerate()
        .map(|(i, &(_, body_start))| {
            let end = starts.get(i + 1).map_or(continuation.len(), |next| next.0);
            squash(&continuation[body_start..end])
        })
        .filter(|s| !s.is_empty())
        .collect()
}

fn cache_key(criterion: &CriterionSpec, model_id: &str) -> String {
    let canonical = json!([
        criterion.task_intro,
        criterion.name,
        criterion.display_definition,
        criterion.scale,
        model_id,
    ]);
    fingerprint(&canonical.to_string())
}

/// Step cache with single-flight misses, optionally persisted as one JSON
/// file per key.
#[derive(Default)]
pub struct CotCache {
    dir: Option<PathBuf>,
    flight: SingleFlight<CotEntry>,
}

impl CotCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn persistent(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(dir.into()),
            flight: SingleFlight::default(),
        }
    }

    fn load(&self, key: &str) -> Result<Option<CotEntry>, CotError> {
        let Some(dir) = &self.dir else { return Ok(None) };
        let path = dir.join(format!("{key}.json"));
        match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| CotError::Cache(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(CotError::Cache(format!("{}: {e}", path.display()))),
        }
    }

    fn store(&self, entry: &CotEntry) -> Result<(), CotError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let err = |e: std::io::Error| CotError::Cache(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(err)?;
        let body = serde_json::to_string_pretty(entry).map_err(|e| CotError::Cache(e.to_string()))?;
        std::fs::write(dir.join(format!("{}.json", entry.key)), body).map_err(err)
    }

    /// Returns the evaluation steps for `criterion`, asking `backend` only on
    /// a cache miss.
    pub async fn generate(
        &self,
        criterion: &CriterionSpec,
        backend: &dyn LlmBackend,
    ) -> Result<CotOutcome, CotError> {
        if criterion.evaluation_steps.is_some() {
            return Err(CotError::StepsPresent(criterion.name.clone()));
        }
        let key = cache_key(criterion, backend.model_id());
        let mut requested = false;
        let requested_ref = &mut requested;
        let key_ref = &key;
        let (entry, _) = self
            .flight
            .get_or_try_init(&key, || async move {
                let key = key_ref;
                if let Some(entry) = self.load(key)? {
                    return Ok(entry);
                }
                let mut req = GenerationRequest::greedy(cot_prompt(criterion));
                req.max_tokens = COT_MAX_TOKENS;
                let resp = backend.generate(&req).await?;
                *requested_ref = !resp.cached;
                let raw = resp.completions.into_iter().next().unwrap_or_default();
                let steps = parse_steps(&raw);
                if steps.is_empty() {
                    return Err(CotError::Unparseable { raw });
                }
                let entry = CotEntry {
                    key: key.clone(),
                    model_id: backend.model_id().to_string(),
                    criterion: criterion.name.clone(),
                    raw_continuation: raw,
                    steps,
                };
                self.store(&entry)?;
                Ok(entry)
            })
            .await?;
        Ok(CotOutcome {
            steps: entry.steps,
            cached: !requested,
        })
    }

    /// Copies of `criteria` where every criterion lacking steps has them
    /// generated (or served from the cache). User-supplied steps are kept.
    pub async fn fill(
        &self,
        criteria: &[CriterionSpec],
        backend: &dyn LlmBackend,
    ) -> Result<Vec<CriterionSpec>, CotError> {
        let mut out = Vec::with_capacity(criteria.len());
        for c in criteria {
            if c.evaluation_steps.is_some() {
                out.push(c.clone());
            } else {
                let outcome = self.generate(c, backend).await?;
                out.push(c.clone().with_steps(outcome.steps));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_numbered_steps() {
        let text = "1.  Read the news article carefully.\n\n2.  Read the summary\nand compare.\n\n3. Assign a score.";
        assert_eq!(
            parse_steps(text),
            vec!["Read the news article carefully.", "Read the summary and compare.", "Assign a score."]
        );
    }

    #[test]
    fn drops_preamble_and_accepts_parens() {
        let text = "Here you go:\n1) First\n2) Second";
        assert_eq!(parse_steps(text), vec!["First", "Second"]);
    }

    #[test]
    fn unnumbered_is_single_step() {
        assert_eq!(parse_steps("  Just read it.  "), vec!["Just read it."]);
        assert!(parse_steps(" \n ").is_empty());
    }

    #[test]
    fn numbers_inside_lines_are_not_enumerators() {
        assert_eq!(
            parse_steps("1. Score on a scale of 1. to 5.\n2. Done"),
            vec!["Score on a scale of 1. to 5.", "Done"]
        );
    }

    #[test]
    fn prompt_ends_with_cue() {
        let c = crate::presets::summeval().criterion("coherence").unwrap().clone();
        let p = cot_prompt(&c);
        assert!(p.ends_with("Evaluation Steps:\n"));
        assert!(p.contains("Coherence (1-5) - the collective quality"));
    }
}
