use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::jsonl::read_jsonl;
use crate::judge::{score_dataset, FailureEntry, ScoringConfig};
use crate::llm::LlmBackend;
use crate::model::{CriterionSpec, EvalRecord, JudgeResult};
use crate::prompt::PromptTemplate;

/// Which summary human judges preferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    HumanBetter,
    LlmBetter,
    Equal,
}

impl Preference {
    pub const ALL: [Preference; 3] = [Preference::HumanBetter, Preference::LlmBetter, Preference::Equal];

    pub fn name(self) -> &'static str {
        match self {
            Preference::HumanBetter => "human_better",
            Preference::LlmBetter => "llm_better",
            Preference::Equal => "equal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceRecord {
    pub article: String,
    pub human_summary: String,
    pub llm_summary: String,
    pub preference: Preference,
}

impl PreferenceRecord {
    fn validate(&self, index: usize) -> Result<(), AnalysisError> {
        for (field, text) in [
            ("article", &self.article),
            ("human_summary", &self.human_summary),
            ("llm_summary", &self.llm_summary),
        ] {
            if text.trim().is_empty() {
                return Err(AnalysisError::Invalid {
                    index,
                    message: format!("`{field}` is empty"),
                });
            }
        }
        Ok(())
    }
}

pub fn read_preferences(path: &Path) -> Result<Vec<PreferenceRecord>, AnalysisError> {
    let items: Vec<PreferenceRecord> = read_jsonl(path)?.into_iter().map(|(_, r)| r).collect();
    for (i, item) in items.iter().enumerate() {
        item.validate(i)?;
    }
    Ok(items)
}

fn pair_ids(index: usize) -> (String, String, String) {
    let doc = format!("pref-{index:05}");
    (format!("{doc}/human"), format!("{doc}/llm"), doc)
}

/// Two records per item, sharing the article, differing only in the summary.
pub fn preference_records(data: &[PreferenceRecord]) -> Vec<EvalRecord> {
    data.iter()
        .enumerate()
        .flat_map(|(i, item)| {
            let (human_id, llm_id, doc) = pair_ids(i);
            [
                (human_id, "human", &item.human_summary),
                (llm_id, "llm", &item.llm_summary),
            ]
            .map(|(record_id, system, summary)| EvalRecord {
                record_id,
                doc_id: doc.clone(),
                system_id: system.into(),
                source: item.article.clone(),
                extra_context: None,
                output: summary.clone(),
                human_ratings: BTreeMap::new(),
                provenance: "preference".into(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub category: Preference,
    /// `None` when no human summary in the category was scored.
    pub human_mean: Option<f64>,
    pub llm_mean: Option<f64>,
    /// Items in the category, scored or not.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub criterion: String,
    pub categories: Vec<CategoryStats>,
    /// Mean judge score of model summaries minus that of human summaries.
    pub overall_delta: Option<f64>,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn fmt_opt(v: Option<f64>, precision: Option<usize>) -> String {
    match (v, precision) {
        (Some(v), Some(p)) => format!("{v:.p$}"),
        (Some(v), None) => v.to_string(),
        (None, _) => String::new(),
    }
}

impl BiasReport {
    pub fn to_markdown(&self) -> String {
        let mut out = "| Category | Human-written mean | LLM-written mean | Count |\n|---|---:|---:|---:|\n".to_string();
        for c in &self.categories {
            let shown = |v| match v {
                None => "n/a".to_string(),
                v => fmt_opt(v, Some(3)),
            };
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} |",
                c.category.name(),
                shown(c.human_mean),
                shown(c.llm_mean),
                c.count
            );
        }
        let _ = writeln!(
            out,
            "\nCriterion: {}; overall LLM minus human: {}.",
            self.criterion,
            self.overall_delta.map_or("n/a".into(), |d| format!("{d:.3}"))
        );
        out
    }

    /// `category,human_mean,llm_mean,count`; undefined means are empty fields.
    pub fn to_csv(&self) -> Result<String, AnalysisError> {
        let render = |e: csv::Error| AnalysisError::Render(e.to_string());
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["category", "human_mean", "llm_mean", "count"]).map_err(render)?;
        for c in &self.categories {
            w.write_record([
                c.category.name().to_string(),
                fmt_opt(c.human_mean, None),
                fmt_opt(c.llm_mean, None),
                c.count.to_string(),
            ])
            .map_err(render)?;
        }
        let bytes = w.into_inner().map_err(|e| AnalysisError::Render(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| AnalysisError::Render(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasOutcome {
    pub report: BiasReport,
    pub results: Vec<JudgeResult>,
    pub failures: Vec<FailureEntry>,
}

/// Scores both summaries of every item with the same criterion, template and
/// configuration, then averages by preference category.
pub async fn bias_report(
    data: &[PreferenceRecord],
    criterion: &CriterionSpec,
    template: &PromptTemplate,
    cfg: &ScoringConfig,
    backend: &dyn LlmBackend,
) -> Result<BiasOutcome, AnalysisError> {
    if data.is_empty() {
        return Err(AnalysisError::Empty);
    }
    for (i, item) in data.iter().enumerate() {
        item.validate(i)?;
    }
    let records = preference_records(data);
    let templates = BTreeMap::from([(criterion.name.clone(), template.clone())]);
    let batch = score_dataset(&records, std::slice::from_ref(criterion), &templates, cfg, backend).await?;
    let scores: BTreeMap<&str, f64> = batch
        .results
        .iter()
        .map(|r| (r.record_id.as_str(), r.final_score))
        .collect();

    let mut human_all = Vec::new();
    let mut llm_all = Vec::new();
    let categories = Preference::ALL
        .iter()
        .map(|&category| {
            let (mut human, mut llm, mut count) = (Vec::new(), Vec::new(), 0);
            for (i, _) in data.iter().enumerate().filter(|(_, d)| d.preference == category) {
                count += 1;
                let (human_id, llm_id, _) = pair_ids(i);
                human.extend(scores.get(human_id.as_str()));
                llm.extend(scores.get(llm_id.as_str()));
            }
            human_all.extend_from_slice(&human);
            llm_all.extend_from_slice(&llm);
            CategoryStats {
                category,
                human_mean: mean(&human),
                llm_mean: mean(&llm),
                count,
            }
        })
        .collect();
    let overall_delta = mean(&llm_all).zip(mean(&human_all)).map(|(l, h)| l - h);
    Ok(BiasOutcome {
        report: BiasReport {
            criterion: criterion.name.clone(),
            categories,
            overall_delta,
        },
        results: batch.results,
        failures: batch.failures,
    })
}
