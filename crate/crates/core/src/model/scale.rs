use serde::{Deserialize, Serialize};

use super::ValidationError;

/// The admissible score set of a criterion.
///
/// Integer ranges are inclusive on both ends. A labeled binary scale maps its
/// positive label to 1 and its negative label to 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreScale {
    IntegerRange { min: i64, max: i64 },
    LabeledBinary { positive: String, negative: String },
}

impl ScoreScale {
    pub fn range(min: i64, max: i64) -> Result<Self, ValidationError> {
        let scale = ScoreScale::IntegerRange { min, max };
        scale.validate()?;
        Ok(scale)
    }

    pub fn yes_no() -> Self {
        ScoreScale::LabeledBinary {
            positive: "Yes".to_string(),
            negative: "No".to_string(),
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        match self {
            ScoreScale::IntegerRange { min, max } if min >= max => Err(ValidationError::Scale(
                format!("integer range needs min < max, got {min}..{max}"),
            )),
            ScoreScale::LabeledBinary { positive, negative }
                if positive.trim().is_empty()
                    || negative.trim().is_empty()
                    || positive.eq_ignore_ascii_case(negative) =>
            {
                Err(ValidationError::Scale(format!(
                    "binary labels must be non-empty and distinct, got {positive:?}/{negative:?}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn min(&self) -> i64 {
        match self {
            ScoreScale::IntegerRange { min, .. } => *min,
            ScoreScale::LabeledBinary { .. } => 0,
        }
    }

    pub fn max(&self) -> i64 {
        match self {
            ScoreScale::IntegerRange { max, .. } => *max,
            ScoreScale::LabeledBinary { .. } => 1,
        }
    }

    /// Every admissible score in ascending order.
    pub fn admissible(&self) -> Vec<i64> {
        (self.min()..=self.max()).collect()
    }

    pub fn contains(&self, value: i64) -> bool {
        (self.min()..=self.max()).contains(&value)
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, ScoreScale::LabeledBinary { .. })
    }
}
