//! Run configuration. Values come from the defaults, then the TOML file given
//! with `--config`, then command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use geval::benchmarks::{ingest, AdapterKind, DatasetDescriptor};
use geval::llm::{Backend, BackendConfig, HttpProvider, Provider, ScriptedProvider};
use geval::metaeval::{AggregationMode, TableSpec, TauVariant, UndefinedPolicy};
use geval::model::validate_criteria;
use geval::presets::{self, PRESET_NAMES};
use geval::prompt::{builtin_template, PromptTemplate};
use geval::{CriterionSpec, EvalRecord, ScoringConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    /// Scripted completions keyed by prompt fingerprint.
    Mock,
    /// OpenAI-compatible chat completions endpoint.
    #[default]
    Http,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendSection {
    pub kind: BackendKind,
    /// Script file for the mock backend.
    pub mock_script: Option<PathBuf>,
    #[serde(flatten)]
    pub client: BackendConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MetaevalSection {
    /// summeval, topical_chat or qags; defaults to the task's table.
    pub table: Option<String>,
    /// Overrides the table's aggregation mode.
    pub aggregation: Option<AggregationMode>,
    pub tau_variant: TauVariant,
    pub undefined_policy: UndefinedPolicy,
    /// Row label in the report.
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BiasSection {
    pub preferences: Option<PathBuf>,
    pub criterion: String,
}

impl Default for BiasSection {
    fn default() -> Self {
        Self {
            preferences: None,
            criterion: "coherence".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    /// Seeds retry jitter.
    pub seed: u64,
    /// Built-in task preset supplying criteria and templates.
    pub task: String,
    /// Subset of criteria to use; empty means all.
    pub criteria: Vec<String>,
    /// JSON array of criterion definitions replacing the preset's.
    pub criteria_file: Option<PathBuf>,
    /// criterion → built-in template id or template file path.
    pub templates: BTreeMap<String, String>,
    pub backend: BackendSection,
    pub scoring: ScoringConfig,
    pub metaeval: MetaevalSection,
    pub bias: BiasSection,
    pub datasets: Vec<DatasetDescriptor>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("geval-run"),
            seed: 0,
            task: "summeval".into(),
            criteria: Vec::new(),
            criteria_file: None,
            templates: BTreeMap::new(),
            backend: BackendSection::default(),
            scoring: ScoringConfig::default(),
            metaeval: MetaevalSection::default(),
            bias: BiasSection::default(),
            datasets: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string_pretty(self).map_err(|e| CliError::config(format!("config snapshot: {e}")))
    }

    /// The backend client settings in force: run seed, and the response cache
    /// under the output directory unless configured elsewhere.
    pub fn client_config(&self) -> BackendConfig {
        let mut client = self.backend.client.clone();
        client.seed = self.seed;
        if client.cache_dir.is_none() {
            client.cache_dir = Some(self.output_dir.join("cache"));
        }
        client
    }

    pub fn backend(&self) -> Result<Backend, CliError> {
        let client = self.client_config();
        let provider: Arc<dyn Provider> = match self.backend.kind {
            BackendKind::Mock => {
                let script = self.backend.mock_script.as_ref().ok_or_else(|| {
                    CliError::config("the mock backend needs a script: pass --mock-script or set backend.mock_script")
                })?;
                Arc::new(ScriptedProvider::from_file(script)?.with_model_id(client.model.clone()))
            }
            BackendKind::Http => Arc::new(HttpProvider::from_config(&client)?),
        };
        Ok(Backend::new(provider, &client)?)
    }

    fn preset(&self) -> Result<presets::TaskPreset, CliError> {
        presets::by_name(&self.task).ok_or_else(|| {
            CliError::config(format!(
                "unknown task `{}`; available tasks: {}",
                self.task,
                PRESET_NAMES.join(", ")
            ))
        })
    }

    /// Criteria in use and the template assigned to each.
    pub fn criteria(&self) -> Result<(Vec<CriterionSpec>, BTreeMap<String, PromptTemplate>), CliError> {
        let preset = self.preset()?;
        let all = match &self.criteria_file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::config(format!("criteria file {}: {e}", path.display())))?;
                serde_json::from_str::<Vec<CriterionSpec>>(&text)
                    .map_err(|e| CliError::config(format!("criteria file {}: {e}", path.display())))?
            }
            None => preset.criteria.clone(),
        };
        let selected = if self.criteria.is_empty() {
            all.clone()
        } else {
            self.criteria
                .iter()
                .map(|name| {
                    all.iter().find(|c| &c.name == name).cloned().ok_or_else(|| {
                        let names: Vec<&str> = all.iter().map(|c| c.name.as_str()).collect();
                        CliError::config(format!(
                            "unknown criterion `{name}` for task `{}`; available criteria: {}\nusage: geval cot [CRITERIA]... (see `geval --help`)",
                            self.task,
                            names.join(", ")
                        ))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?
        };
        if selected.is_empty() {
            return Err(CliError::config("no criteria selected"));
        }
        validate_criteria(&selected)?;

        let fallback = preset.templates.values().next().cloned();
        let mut templates = BTreeMap::new();
        for c in &selected {
            let choice = self
                .templates
                .get(&c.name)
                .or_else(|| preset.templates.get(&c.name))
                .or(fallback.as_ref())
                .ok_or_else(|| CliError::config(format!("no template for criterion `{}`", c.name)))?;
            let template = match builtin_template(choice) {
                Some(t) => t,
                None => PromptTemplate::load(Path::new(choice))?,
            };
            templates.insert(c.name.clone(), template);
        }
        Ok((selected, templates))
    }

    pub fn records(&self) -> Result<Vec<EvalRecord>, CliError> {
        if self.datasets.is_empty() {
            return Err(CliError::config(
                "no dataset configured: pass --dataset and --adapter or add [[datasets]] to the config",
            ));
        }
        let mut records = Vec::new();
        for desc in &self.datasets {
            records.extend(ingest(desc)?);
        }
        Ok(records)
    }

    /// The correlation table, with the configured aggregation overrides.
    pub fn table(&self) -> Result<TableSpec, CliError> {
        let name = self.metaeval.table.as_deref().unwrap_or(&self.task);
        let mut table = TableSpec::by_name(name).ok_or_else(|| {
            CliError::config(format!(
                "unknown table `{name}`; available tables: summeval, topical_chat, qags"
            ))
        })?;
        if let Some(mode) = self.metaeval.aggregation {
            table.aggregation.mode = mode;
        }
        table.aggregation.tau_variant = self.metaeval.tau_variant;
        table.aggregation.undefined_policy = self.metaeval.undefined_policy;
        Ok(table)
    }
}

/// A dataset given on the command line.
pub fn descriptor(path: &Path, adapter: AdapterKind, name: Option<&str>) -> DatasetDescriptor {
    let name = name.map(str::to_string).unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| adapter.name().to_string())
    });
    DatasetDescriptor::new(name, adapter, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn readme_example() -> String {
        let readme = include_str!("../../../README.md");
        let start = readme.find("```toml\n").expect("toml block") + "```toml\n".len();
        let end = start + readme[start..].find("```").expect("block end");
        readme[start..end].to_string()
    }

    #[test]
    fn documented_example_parses() {
        let cfg: RunConfig = toml::from_str(&readme_example()).unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("runs/summeval"));
        assert_eq!(cfg.criteria, vec!["coherence"]);
        assert_eq!(cfg.backend.kind, BackendKind::Http);
        assert_eq!(cfg.backend.client.retry.max_attempts, 5);
        assert_eq!(cfg.scoring, ScoringConfig::sample_weighted());
        assert_eq!(cfg.datasets.len(), 1);
        assert_eq!(cfg.datasets[0].adapter, AdapterKind::Summeval);
    }

    #[test]
    fn snapshot_round_trips() {
        let mut cfg: RunConfig = toml::from_str(&readme_example()).unwrap();
        cfg.backend.mock_script = Some("s.json".into());
        cfg.metaeval.aggregation = Some(AggregationMode::Pooled);
        let back: RunConfig = toml::from_str(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn empty_file_is_defaults() {
        assert_eq!(toml::from_str::<RunConfig>("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_task_lists_presets() {
        let cfg = RunConfig {
            task: "poetry".into(),
            ..RunConfig::default()
        };
        let err = cfg.criteria().unwrap_err();
        assert!(err.message.contains("summeval, topical_chat, qags"));
    }

    #[test]
    fn table_follows_task_with_overrides() {
        let mut cfg = RunConfig {
            task: "topical_chat".into(),
            ..RunConfig::default()
        };
        assert_eq!(cfg.table().unwrap().aggregation.mode, AggregationMode::TurnLevel);
        cfg.metaeval.aggregation = Some(AggregationMode::Pooled);
        cfg.metaeval.tau_variant = TauVariant::TauA;
        let t = cfg.table().unwrap();
        assert_eq!(t.aggregation.mode, AggregationMode::Pooled);
        assert_eq!(t.aggregation.tau_variant, TauVariant::TauA);
    }
}
