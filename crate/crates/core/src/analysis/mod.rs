//! Studies built on the judge: preference bias toward model-written text and
//! ablations of the scoring recipe.

mod ablation;
mod bias;

pub use ablation::{ablation_compare, prompt_diff, AblationOutcome, PromptDiff, Variant};
pub use bias::{
    bias_report, preference_records, read_preferences, BiasOutcome, BiasReport, CategoryStats,
    Preference, PreferenceRecord,
};

use crate::jsonl::JsonlError;
use crate::judge::JudgeError;
use crate::metaeval::MetaevalError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("dataset is empty")]
    Empty,
    #[error("item {index}: {message}")]
    Invalid { index: usize, message: String },
    #[error("no variants requested")]
    NoVariants,
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Metaeval(#[from] MetaevalError),
    #[error("rendering: {0}")]
    Render(String),
}
