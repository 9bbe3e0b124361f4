//! Benchmark files in their distributed layouts, turned into [`EvalRecord`]s.
//!
//! Adapters:
//! - `summeval`: JSONL, one system summary per line with `id`, `model_id`,
//!   `decoded`, `text` and `expert_annotations` (a list of aspect → rating
//!   objects, one per annotator).
//! - `topical_chat_usr`: one JSON array of dialogues with `context`, `fact`
//!   and `responses`; each response has `response`, `model` and a list of
//!   annotator ratings per aspect (`Natural`, `Maintains Context`, ...).
//! - `qags`: JSONL with `article` and `summary_sentences`, each sentence
//!   carrying `responses` of `{worker_id, response: "yes"|"no"}`.
//! - `normalized_jsonl`: the crate's own record format.
//!
//! Unknown extra fields are ignored; missing required ones are errors.

mod adapters;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::jsonl::{write_jsonl, JsonlError};
use crate::model::{EvalRecord, ValidationError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterKind {
    Summeval,
    TopicalChatUsr,
    Qags,
    NormalizedJsonl,
}

impl AdapterKind {
    pub fn name(self) -> &'static str {
        match self {
            AdapterKind::Summeval => "summeval",
            AdapterKind::TopicalChatUsr => "topical_chat_usr",
            AdapterKind::Qags => "qags",
            AdapterKind::NormalizedJsonl => "normalized_jsonl",
        }
    }

    /// Aspect names the source format can carry; `None` means any.
    pub fn known_aspects(self) -> Option<&'static [&'static str]> {
        match self {
            AdapterKind::Summeval => Some(&["coherence", "consistency", "fluency", "relevance"]),
            AdapterKind::TopicalChatUsr => Some(&[
                "Understandable",
                "Natural",
                "Maintains Context",
                "Engaging",
                "Uses Knowledge",
                "Overall",
            ]),
            AdapterKind::Qags => Some(&["consistency"]),
            AdapterKind::NormalizedJsonl => None,
        }
    }

    /// Benchmark aspect → canonical criterion name.
    pub fn default_aspect_map(self) -> BTreeMap<String, String> {
        let pairs: &[(&str, &str)] = match self {
            AdapterKind::Summeval => &[
                ("coherence", "coherence"),
                ("consistency", "consistency"),
                ("fluency", "fluency"),
                ("relevance", "relevance"),
            ],
            AdapterKind::TopicalChatUsr => &[
                ("Natural", "naturalness"),
                ("Maintains Context", "coherence"),
                ("Engaging", "engagingness"),
                ("Uses Knowledge", "groundedness"),
            ],
            AdapterKind::Qags => &[("consistency", "consistency")],
            AdapterKind::NormalizedJsonl => &[],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }
}

impl std::str::FromStr for AdapterKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "summeval" => Ok(Self::Summeval),
            "topical_chat_usr" => Ok(Self::TopicalChatUsr),
            "qags" => Ok(Self::Qags),
            "normalized_jsonl" => Ok(Self::NormalizedJsonl),
            other => Err(format!(
                "unknown adapter `{other}` (expected summeval, topical_chat_usr, qags or normalized_jsonl)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Mean,
    Median,
}

impl Aggregation {
    /// `values` must be non-empty.
    pub fn apply(self, values: &[f64]) -> f64 {
        match self {
            Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregation::Median => {
                let mut v = values.to_vec();
                v.sort_by(f64::total_cmp);
                let mid = v.len() / 2;
                if v.len() % 2 == 1 {
                    v[mid]
                } else {
                    (v[mid - 1] + v[mid]) / 2.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    /// Also the provenance tag of every record.
    pub name: String,
    pub adapter: AdapterKind,
    pub path: PathBuf,
    /// Empty means the adapter's default map.
    #[serde(default)]
    pub aspect_map: BTreeMap<String, String>,
    #[serde(default)]
    pub aggregation: Aggregation,
}

impl DatasetDescriptor {
    pub fn new(name: impl Into<String>, adapter: AdapterKind, path: impl Into<PathBuf>) -> Self {
        Self {
            name: name.into(),
            adapter,
            path: path.into(),
            aspect_map: BTreeMap::new(),
            aggregation: Aggregation::Mean,
        }
    }

    /// The map in force: the configured one, or the adapter default.
    pub fn effective_aspect_map(&self) -> BTreeMap<String, String> {
        if self.aspect_map.is_empty() {
            self.adapter.default_aspect_map()
        } else {
            self.aspect_map.clone()
        }
    }

    pub fn validate(&self) -> Result<(), BenchmarkError> {
        if self.name.trim().is_empty() {
            return Err(BenchmarkError::Descriptor("dataset name is empty".into()));
        }
        let map = self.effective_aspect_map();
        let mut targets = BTreeSet::new();
        for (aspect, criterion) in &map {
            if !targets.insert(criterion) {
                return Err(BenchmarkError::Descriptor(format!(
                    "aspect map sends more than one aspect to `{criterion}`"
                )));
            }
            if let Some(known) = self.adapter.known_aspects() {
                if !known.contains(&aspect.as_str()) {
                    return Err(BenchmarkError::UnknownAspect {
                        aspect: aspect.clone(),
                        aspect_map: describe_map(&map),
                    });
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn describe_map(map: &BTreeMap<String, String>) -> String {
    if map.is_empty() {
        return "(empty)".into();
    }
    map.iter()
        .map(|(k, v)| format!("{k} -> {v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchmarkError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}, {location}: {message}")]
    Schema {
        path: String,
        location: String,
        message: String,
    },
    #[error("unknown aspect `{aspect}`; aspect map: {aspect_map}")]
    UnknownAspect { aspect: String, aspect_map: String },
    #[error("dataset descriptor: {0}")]
    Descriptor(String),
    #[error("{path}, {location}: {source}")]
    Invalid {
        path: String,
        location: String,
        source: ValidationError,
    },
}

impl From<JsonlError> for BenchmarkError {
    fn from(e: JsonlError) -> Self {
        match e {
            JsonlError::Io { path, message } => BenchmarkError::Io { path, message },
            JsonlError::Line { path, line, message } => BenchmarkError::Schema {
                path,
                location: format!("line {line}"),
                message,
            },
        }
    }
}

/// Reads the dataset described by `desc`, preserving source order.
pub fn ingest(desc: &DatasetDescriptor) -> Result<Vec<EvalRecord>, BenchmarkError> {
    desc.validate()?;
    if !desc.path.exists() {
        return Err(BenchmarkError::Io {
            path: desc.path.display().to_string(),
            message: "no such file".into(),
        });
    }
    match desc.adapter {
        AdapterKind::Summeval => adapters::summeval(desc),
        AdapterKind::TopicalChatUsr => adapters::topical_chat_usr(desc),
        AdapterKind::Qags => adapters::qags(desc),
        AdapterKind::NormalizedJsonl => adapters::normalized(desc),
    }
}

/// Writes records in the normalized format, one per line.
pub fn emit_normalized(records: &[EvalRecord], path: &Path) -> Result<usize, BenchmarkError> {
    Ok(write_jsonl(path, records)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_and_mean() {
        assert_eq!(Aggregation::Mean.apply(&[2.0, 3.0, 4.0]), 3.0);
        assert_eq!(Aggregation::Median.apply(&[5.0, 1.0, 2.0]), 2.0);
        assert_eq!(Aggregation::Median.apply(&[1.0, 2.0, 4.0, 5.0]), 3.0);
    }

    #[test]
    fn aspect_map_targets_unique() {
        let mut d = DatasetDescriptor::new("x", AdapterKind::Summeval, "f");
        d.aspect_map = BTreeMap::from([
            ("coherence".to_string(), "quality".to_string()),
            ("fluency".to_string(), "quality".to_string()),
        ]);
        assert!(matches!(d.validate(), Err(BenchmarkError::Descriptor(_))));
    }

    #[test]
    fn unknown_aspect_lists_map() {
        let mut d = DatasetDescriptor::new("x", AdapterKind::TopicalChatUsr, "f");
        d.aspect_map = BTreeMap::from([("Funny".to_string(), "humor".to_string())]);
        let err = d.validate().unwrap_err();
        assert!(err.to_string().contains("Funny -> humor"), "{err}");
    }

    #[test]
    fn adapter_names_parse() {
        for kind in [
            AdapterKind::Summeval,
            AdapterKind::TopicalChatUsr,
            AdapterKind::Qags,
            AdapterKind::NormalizedJsonl,
        ] {
            assert_eq!(kind.name().parse::<AdapterKind>().unwrap(), kind);
        }
    }
}
