//! LLM-as-judge evaluation of generated text.
//!
//! A judge model reads a form-filling prompt (task introduction, criterion,
//! optional auto-generated evaluation steps, the input and the output to
//! rate) and emits a score. Scores are estimated as the expectation of the
//! model's distribution over the admissible values, and judged against human
//! ratings through correlation meta-evaluation.

mod flight;
mod jsonl;

pub mod analysis;
pub mod benchmarks;
pub mod judge;
pub mod llm;
pub mod metaeval;
pub mod model;
pub mod presets;
pub mod prompt;

pub use jsonl::JsonlError;
pub use judge::{score_dataset, score_one, JudgeError, Regime, ScoringConfig};
pub use model::{
    weighted_score, CriterionSpec, EvalRecord, JudgeResult, ScoreDistribution, ScoreScale,
    ValidationError,
};
