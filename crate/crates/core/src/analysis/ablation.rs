use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::judge::{score_dataset, JudgeError, ScoredBatch, ScoringConfig};
use crate::llm::LlmBackend;
use crate::metaeval::{compute_row, CorrelationReport, TableSpec};
use crate::model::{CriterionSpec, EvalRecord};
use crate::prompt::{assemble, render_steps, PromptTemplate};

/// A scoring recipe compared in the ablation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Evaluation steps and probability weighting.
    Full,
    /// One greedy score per pair.
    NoProbs,
    /// No evaluation steps in the prompt.
    NoCot,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Full => "G-Eval",
            Variant::NoProbs => "- Probs",
            Variant::NoCot => "- CoT",
        }
    }

    pub fn config(self, base: &ScoringConfig) -> ScoringConfig {
        match self {
            Variant::Full => base.clone(),
            Variant::NoProbs => ScoringConfig {
                include_cot: base.include_cot,
                out_of_scale_policy: base.out_of_scale_policy,
                max_tokens: base.max_tokens,
                ..ScoringConfig::single_greedy()
            },
            Variant::NoCot => ScoringConfig {
                include_cot: false,
                ..base.clone()
            },
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Variant::Full),
            "no_probs" => Ok(Variant::NoProbs),
            "no_cot" => Ok(Variant::NoCot),
            other => Err(format!("unknown variant `{other}` (expected full, no_probs or no_cot)")),
        }
    }
}

/// Where two prompts for the same pair differ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptDiff {
    pub record_id: String,
    pub criterion: String,
    pub full_fingerprint: String,
    pub variant_fingerprint: String,
    /// Byte offset where the prompts start to differ.
    pub offset: usize,
    pub full_only: String,
    pub variant_only: String,
}

/// The differing middle of two strings after removing their common prefix
/// and suffix: `(offset, a_only, b_only)`.
pub fn prompt_diff(a: &str, b: &str) -> (usize, String, String) {
    let mut prefix = a
        .bytes()
        .zip(b.bytes())
        .take_while(|(x, y)| x == y)
        .count();
    while !a.is_char_boundary(prefix) || !b.is_char_boundary(prefix) {
        prefix -= 1;
    }
    let max_suffix = a.len().min(b.len()) - prefix;
    let mut suffix = a
        .bytes()
        .rev()
        .zip(b.bytes().rev())
        .take(max_suffix)
        .take_while(|(x, y)| x == y)
        .count();
    while !a.is_char_boundary(a.len() - suffix) || !b.is_char_boundary(b.len() - suffix) {
        suffix -= 1;
    }
    (
        prefix,
        a[prefix..a.len() - suffix].to_string(),
        b[prefix..b.len() - suffix].to_string(),
    )
}

/// Offset at which inserting `block` into `short` yields `long`, trying each
/// occurrence of `block` in `long`.
fn insertion_offset(long: &str, short: &str, block: &str) -> Option<usize> {
    if block.is_empty() || long.len() != short.len() + block.len() {
        return None;
    }
    long.match_indices(block)
        .map(|(i, _)| i)
        .find(|&i| long[..i] == short[..i] && long[i + block.len()..] == short[i..])
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationOutcome {
    /// One row per variant, in table order.
    pub report: CorrelationReport,
    pub batches: Vec<(Variant, ScoredBatch)>,
    /// Full vs. no-CoT prompts for every pair, when no-CoT was requested.
    pub prompt_diffs: Vec<PromptDiff>,
}

/// Scores the dataset once per variant on a shared backend and lays the
/// correlations out as rows of one table.
pub async fn ablation_compare(
    records: &[EvalRecord],
    criteria: &[CriterionSpec],
    templates: &BTreeMap<String, PromptTemplate>,
    base: &ScoringConfig,
    backend: &dyn LlmBackend,
    variants: &[Variant],
    table: &TableSpec,
) -> Result<AblationOutcome, AnalysisError> {
    let mut variants = variants.to_vec();
    variants.sort();
    variants.dedup();
    if variants.is_empty() {
        return Err(AnalysisError::NoVariants);
    }

    let mut rows = Vec::new();
    let mut batches = Vec::new();
    for &variant in &variants {
        let batch = score_dataset(records, criteria, templates, &variant.config(base), backend).await?;
        rows.push(compute_row(variant.label(), table, &batch.results, records)?);
        batches.push((variant, batch));
    }

    let mut prompt_diffs = Vec::new();
    if variants.contains(&Variant::NoCot) {
        for record in records {
            for criterion in criteria {
                let template = templates.get(&criterion.name).ok_or_else(|| {
                    JudgeError::Config(format!("no template assigned to criterion `{}`", criterion.name))
                })?;
                let full = assemble(template, criterion, record, true).map_err(JudgeError::from)?;
                let lean = assemble(template, criterion, record, false).map_err(JudgeError::from)?;
                // A pure insertion can be aligned several ways when the block's
                // edges repeat nearby text; prefer the alignment on the block itself.
                let block = criterion.evaluation_steps.as_deref().map(render_steps);
                let (offset, full_only, variant_only) = match block
                    .as_deref()
                    .and_then(|b| insertion_offset(&full.text, &lean.text, b).map(|i| (i, b)))
                {
                    Some((i, b)) => (i, b.to_string(), String::new()),
                    None => prompt_diff(&full.text, &lean.text),
                };
                prompt_diffs.push(PromptDiff {
                    record_id: record.record_id.clone(),
                    criterion: criterion.name.clone(),
                    full_fingerprint: full.fingerprint,
                    variant_fingerprint: lean.fingerprint,
                    offset,
                    full_only,
                    variant_only,
                });
            }
        }
    }

    Ok(AblationOutcome {
        report: CorrelationReport::new(table, rows),
        batches,
        prompt_diffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diff_isolates_middle() {
        assert_eq!(prompt_diff("abcXYZdef", "abcdef"), (3, "XYZ".into(), String::new()));
        assert_eq!(prompt_diff("same", "same"), (4, String::new(), String::new()));
        assert_eq!(prompt_diff("aaa", "aa"), (2, "a".into(), String::new()));
    }

    #[test]
    fn insertion_prefers_block_alignment() {
        let block = "Steps:\n1. x\n\n";
        let short = "Intro\n\nSee below";
        let long = format!("Intro\n\n{block}See below");
        assert_eq!(insertion_offset(&long, short, block), Some(7));
        assert_eq!(insertion_offset("abc", "ab", "zz"), None);
    }

    #[test]
    fn diff_respects_char_boundaries() {
        let (_, a, b) = prompt_diff("xé", "xè");
        assert_eq!((a.as_str(), b.as_str()), ("é", "è"));
    }

    #[test]
    fn variant_configs() {
        let base = ScoringConfig::sample_weighted();
        assert_eq!(Variant::NoProbs.config(&base).n_samples, 1);
        assert!(Variant::NoProbs.config(&base).include_cot);
        assert!(!Variant::NoCot.config(&base).include_cot);
        assert_eq!(Variant::NoCot.config(&base).n_samples, 20);
    }
}
