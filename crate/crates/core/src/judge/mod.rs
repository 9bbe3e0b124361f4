//! Scoring one (record, criterion) pair: prompt, elicit, estimate, weight.

mod estimate;
mod parse;

use std::collections::BTreeMap;
use std::path::Path;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use crate::jsonl::{read_jsonl, write_jsonl, JsonlError};
use crate::llm::{GenerationRequest, LlmBackend, LlmError, SCORING_MAX_TOKENS};
use crate::model::{
    weighted_score, CriterionSpec, EvalRecord, JudgeResult, ScoreDistribution, ScoreScale,
    ValidationError,
};
use crate::prompt::{assemble, PromptError, PromptTemplate};

pub use estimate::{estimate_distribution_logprobs, estimate_distribution_sampling, OutOfScalePolicy};
pub use parse::{parse_score, ParsedScore};

/// Pairs scored concurrently by [`score_dataset`]; provider calls are further
/// bounded by the backend.
const PAIR_CONCURRENCY: usize = 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JudgeError {
    #[error("no admissible score in response {text:?}")]
    Parse { text: String },
    #[error("distribution estimation: {0}")]
    Estimation(String),
    #[error("response carries no token logprobs")]
    MissingLogprobs,
    #[error("scoring configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("{record_id}/{criterion}: {source}")]
    Pair {
        record_id: String,
        criterion: String,
        source: Box<JudgeError>,
    },
}

impl JudgeError {
    /// Short machine-readable class for failure manifests.
    pub fn kind(&self) -> &'static str {
        match self {
            JudgeError::Parse { .. } => "parse",
            JudgeError::Estimation(_) | JudgeError::MissingLogprobs => "estimation",
            JudgeError::Config(_) => "config",
            JudgeError::Prompt(_) => "assembly",
            JudgeError::Llm(LlmError::Credential(_)) => "credential",
            JudgeError::Llm(LlmError::Protocol { .. }) => "protocol",
            JudgeError::Llm(LlmError::ScriptedMiss { .. }) => "scripted_miss",
            JudgeError::Llm(_) => "transport",
            JudgeError::Validation(_) => "validation",
            JudgeError::Pair { source, .. } => source.kind(),
        }
    }

    fn tagged(self, record_id: &str, criterion: &str) -> Self {
        JudgeError::Pair {
            record_id: record_id.to_string(),
            criterion: criterion.to_string(),
            source: Box::new(self),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// One greedy completion; probabilities from its token logprobs.
    LogprobWeighted,
    /// `n` sampled completions; probabilities from their frequencies.
    SampleWeighted,
    /// One greedy completion taken at face value.
    SingleGreedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringConfig {
    pub regime: Regime,
    pub n_samples: u32,
    pub temperature: f64,
    pub top_p: f64,
    pub out_of_scale_policy: OutOfScalePolicy,
    pub include_cot: bool,
    pub top_logprobs_k: u32,
    pub max_tokens: u32,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self::sample_weighted()
    }
}

impl ScoringConfig {
    /// n = 20, temperature 1, top_p 1.
    pub fn sample_weighted() -> Self {
        Self {
            regime: Regime::SampleWeighted,
            n_samples: 20,
            temperature: 1.0,
            top_p: 1.0,
            out_of_scale_policy: OutOfScalePolicy::DiscardAndRenormalize,
            include_cot: true,
            top_logprobs_k: 0,
            max_tokens: SCORING_MAX_TOKENS,
        }
    }

    pub fn logprob_weighted() -> Self {
        Self {
            regime: Regime::LogprobWeighted,
            n_samples: 1,
            temperature: 0.0,
            top_logprobs_k: 5,
            ..Self::sample_weighted()
        }
    }

    pub fn single_greedy() -> Self {
        Self {
            regime: Regime::SingleGreedy,
            n_samples: 1,
            temperature: 0.0,
            ..Self::sample_weighted()
        }
    }

    pub fn validate(&self) -> Result<(), JudgeError> {
        let err = |m: &str| Err(JudgeError::Config(m.to_string()));
        if self.n_samples == 0 {
            return err("n_samples must be >= 1");
        }
        match self.regime {
            Regime::SingleGreedy if self.n_samples != 1 => err("single_greedy requires n_samples = 1"),
            Regime::LogprobWeighted if self.n_samples != 1 => {
                err("logprob_weighted reads one greedy completion; n_samples must be 1")
            }
            Regime::LogprobWeighted if self.top_logprobs_k == 0 => {
                err("logprob_weighted requires top_logprobs_k >= 1")
            }
            _ => Ok(()),
        }
    }

    /// Checks the configuration against one criterion's scale.
    pub fn validate_for(&self, scale: &ScoreScale) -> Result<(), JudgeError> {
        self.validate()?;
        if self.regime == Regime::LogprobWeighted && scale.max() >= 10 {
            return Err(JudgeError::Config(format!(
                "logprob_weighted needs single-token scores; scale max {} is too large",
                scale.max()
            )));
        }
        Ok(())
    }

    pub fn request(&self, prompt: String) -> GenerationRequest {
        let want_logprobs = self.regime == Regime::LogprobWeighted;
        GenerationRequest {
            prompt,
            temperature: self.temperature,
            top_p: self.top_p,
            n_samples: self.n_samples,
            max_tokens: self.max_tokens,
            want_logprobs,
            top_logprobs_k: if want_logprobs { self.top_logprobs_k } else { 0 },
        }
    }
}

/// Scores one record on one criterion.
pub async fn score_one(
    record: &EvalRecord,
    criterion: &CriterionSpec,
    template: &PromptTemplate,
    cfg: &ScoringConfig,
    backend: &dyn LlmBackend,
) -> Result<JudgeResult, JudgeError> {
    score_pair(record, criterion, template, cfg, backend)
        .await
        .map_err(|e| e.tagged(&record.record_id, &criterion.name))
}

async fn score_pair(
    record: &EvalRecord,
    criterion: &CriterionSpec,
    template: &PromptTemplate,
    cfg: &ScoringConfig,
    backend: &dyn LlmBackend,
) -> Result<JudgeResult, JudgeError> {
    cfg.validate_for(&criterion.scale)?;
    let prompt = assemble(template, criterion, record, cfg.include_cot)?;
    let resp = backend.generate(&cfg.request(prompt.text)).await?;
    let scale = &criterion.scale;
    let (distribution, parse_failures) = match cfg.regime {
        Regime::SampleWeighted => {
            let dist = estimate_distribution_sampling(&resp.completions, scale, cfg.out_of_scale_policy)?;
            let failures = resp.completions.len() - dist.sample_count;
            (dist, failures)
        }
        Regime::SingleGreedy => {
            let text = resp.completions.first().map(String::as_str).unwrap_or_default();
            let parsed = parse_score(text, scale)?;
            (ScoreDistribution::degenerate(scale, parsed.value)?, 0)
        }
        Regime::LogprobWeighted => (estimate_distribution_logprobs(&resp, scale)?, 0),
    };
    distribution.validate_for(scale)?;
    let final_score = weighted_score(&distribution)?;
    Ok(JudgeResult {
        record_id: record.record_id.clone(),
        criterion: criterion.name.clone(),
        distribution,
        final_score,
        raw_responses: resp.completions,
        parse_failures,
        prompt_fingerprint: prompt.fingerprint,
    })
}

/// One pair that could not be scored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureEntry {
    pub record_id: String,
    pub criterion: String,
    pub error_kind: String,
    pub message: String,
}

/// Results plus the failure manifest, both sorted by (record_id, criterion).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoredBatch {
    pub results: Vec<JudgeResult>,
    pub failures: Vec<FailureEntry>,
}

/// Scores every (record, criterion) pair. Pair-level failures go to the
/// manifest; only configuration problems abort the batch.
pub async fn score_dataset(
    records: &[EvalRecord],
    criteria: &[CriterionSpec],
    templates: &BTreeMap<String, PromptTemplate>,
    cfg: &ScoringConfig,
    backend: &dyn LlmBackend,
) -> Result<ScoredBatch, JudgeError> {
    let mut plan = Vec::with_capacity(criteria.len());
    for criterion in criteria {
        let template = templates.get(&criterion.name).ok_or_else(|| {
            JudgeError::Config(format!("no template assigned to criterion `{}`", criterion.name))
        })?;
        cfg.validate_for(&criterion.scale)?;
        plan.push((criterion, template));
    }

    let jobs = records
        .iter()
        .flat_map(|r| plan.iter().map(move |(c, t)| (r, *c, *t)));
    let outcomes: Vec<_> = stream::iter(jobs)
        .map(|(record, criterion, template)| async move {
            (
                record,
                criterion,
                score_one(record, criterion, template, cfg, backend).await,
            )
        })
        .buffer_unordered(PAIR_CONCURRENCY)
        .collect()
        .await;

    let mut batch = ScoredBatch::default();
    for (record, criterion, outcome) in outcomes {
        match outcome {
            Ok(result) => batch.results.push(result),
            Err(e) => batch.failures.push(FailureEntry {
                record_id: record.record_id.clone(),
                criterion: criterion.name.clone(),
                error_kind: e.kind().to_string(),
                message: e.to_string(),
            }),
        }
    }
    batch
        .results
        .sort_by(|a, b| (&a.record_id, &a.criterion).cmp(&(&b.record_id, &b.criterion)));
    batch
        .failures
        .sort_by(|a, b| (&a.record_id, &a.criterion).cmp(&(&b.record_id, &b.criterion)));
    Ok(batch)
}

/// Line format of the results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultLine {
    pub record_id: String,
    pub criterion: String,
    pub final_score: f64,
    pub distribution: DistributionLine,
    pub estimation: crate::model::Estimation,
    pub sample_count: usize,
    pub parse_failures: usize,
    pub prompt_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionLine {
    pub support: Vec<i64>,
    pub probs: Vec<f64>,
}

impl From<&JudgeResult> for ResultLine {
    fn from(r: &JudgeResult) -> Self {
        Self {
            record_id: r.record_id.clone(),
            criterion: r.criterion.clone(),
            final_score: r.final_score,
            distribution: DistributionLine {
                support: r.distribution.support.clone(),
                probs: r.distribution.probs.clone(),
            },
            estimation: r.distribution.estimation,
            sample_count: r.distribution.sample_count,
            parse_failures: r.parse_failures,
            prompt_fingerprint: r.prompt_fingerprint.clone(),
        }
    }
}

impl ResultLine {
    /// Rebuilds a result; raw responses are not part of the line format.
    pub fn into_result(self) -> JudgeResult {
        JudgeResult {
            record_id: self.record_id,
            criterion: self.criterion,
            distribution: ScoreDistribution {
                support: self.distribution.support,
                probs: self.distribution.probs,
                estimation: self.estimation,
                sample_count: self.sample_count,
            },
            final_score: self.final_score,
            raw_responses: Vec::new(),
            parse_failures: self.parse_failures,
            prompt_fingerprint: self.prompt_fingerprint,
        }
    }
}

pub fn write_results(path: &Path, results: &[JudgeResult]) -> Result<usize, JsonlError> {
    write_jsonl(path, results.iter().map(ResultLine::from))
}

pub fn write_failures(path: &Path, failures: &[FailureEntry]) -> Result<usize, JsonlError> {
    write_jsonl(path, failures)
}

pub fn read_results(path: &Path) -> Result<Vec<JudgeResult>, JsonlError> {
    Ok(read_jsonl::<ResultLine>(path)?
        .into_iter()
        .map(|(_, line)| line.into_result())
        .collect())
}
