//! Domain types shared across the crate. Everything here is pure data.

mod criterion;
mod distribution;
mod record;
mod scale;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use criterion::{validate_criteria, CriterionSpec};
pub use distribution::{weighted_score, Estimation, ScoreDistribution, PROB_SUM_TOLERANCE};
pub use record::{validate_record, validate_record_aspects, EvalRecord};
pub use scale::ScoreScale;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidationError {
    #[error("invalid scale: {0}")]
    Scale(String),
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("invalid criterion: {0}")]
    Criterion(String),
    #[error("invalid record {record_id}: {message}")]
    Record { record_id: String, message: String },
}

/// Outcome of judging one (record, criterion) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeResult {
    pub record_id: String,
    pub criterion: String,
    pub distribution: ScoreDistribution,
    pub final_score: f64,
    pub raw_responses: Vec<String>,
    pub parse_failures: usize,
    pub prompt_fingerprint: String,
}

/// Hex SHA-256 of a text. Used to fingerprint prompts and cache keys.
pub fn fingerprint(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_is_stable() {
        assert_eq!(fingerprint("abc"), fingerprint("abc"));
        assert_ne!(fingerprint("abc"), fingerprint("abd"));
        assert_eq!(
            fingerprint(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
