use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ScoreScale, ValidationError};

/// Tolerance on the sum of a distribution's probabilities.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// How a distribution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimation {
    Logprobs,
    Sampling,
    Degenerate,
}

/// Probability mass over the admissible scores of a scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistribution {
    pub support: Vec<i64>,
    pub probs: Vec<f64>,
    pub estimation: Estimation,
    /// Number of parsed samples behind the estimate; 0 unless sampling-derived.
    pub sample_count: usize,
}

impl ScoreDistribution {
    /// All mass on `score`, over the full support of `scale`.
    pub fn degenerate(scale: &ScoreScale, score: i64) -> Result<Self, ValidationError> {
        if !scale.contains(score) {
            return Err(ValidationError::Distribution(format!(
                "score {score} outside scale {}..={}",
                scale.min(),
                scale.max()
            )));
        }
        let support = scale.admissible();
        let probs = support
            .iter()
            .map(|&s| if s == score { 1.0 } else { 0.0 })
            .collect();
        Ok(Self {
            support,
            probs,
            estimation: Estimation::Degenerate,
            sample_count: 0,
        })
    }

    /// Relative frequencies of tallied scores.
    pub fn from_counts(
        scale: &ScoreScale,
        counts: &BTreeMap<i64, usize>,
    ) -> Result<Self, ValidationError> {
        let total: usize = counts.values().sum();
        if total == 0 {
            return Err(ValidationError::Distribution("no counts to normalize".into()));
        }
        if let Some(bad) = counts.keys().find(|s| !scale.contains(**s)) {
            return Err(ValidationError::Distribution(format!(
                "count for inadmissible score {bad}"
            )));
        }
        let support = scale.admissible();
        let probs = support
            .iter()
            .map(|s| counts.get(s).copied().unwrap_or(0) as f64 / total as f64)
            .collect();
        Ok(Self {
            support,
            probs,
            estimation: Estimation::Sampling,
            sample_count: total,
        })
    }

    /// Normalizes non-negative weights keyed by score into a distribution.
    pub fn from_weights(
        scale: &ScoreScale,
        weights: &BTreeMap<i64, f64>,
        estimation: Estimation,
    ) -> Result<Self, ValidationError> {
        if weights.values().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(ValidationError::Distribution(
                "weights must be finite and non-negative".into(),
            ));
        }
        if let Some(bad) = weights.keys().find(|s| !scale.contains(**s)) {
            return Err(ValidationError::Distribution(format!(
                "weight for inadmissible score {bad}"
            )));
        }
        let total: f64 = weights.values().sum();
        if total <= 0.0 {
            return Err(ValidationError::Distribution("total weight is zero".into()));
        }
        let support = scale.admissible();
        let probs = support
            .iter()
            .map(|s| weights.get(s).copied().unwrap_or(0.0) / total)
            .collect();
        Ok(Self {
            support,
            probs,
            estimation,
            sample_count: 0,
        })
    }

    /// Checks the shape of the distribution on its own.
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.support.is_empty() {
            return Err(ValidationError::Distribution("empty support".into()));
        }
        if self.support.len() != self.probs.len() {
            return Err(ValidationError::Distribution(format!(
                "support has {} scores but {} probabilities",
                self.support.len(),
                self.probs.len()
            )));
        }
        if let Some(p) = self.probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(ValidationError::Distribution(format!(
                "invalid probability {p}"
            )));
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(ValidationError::Distribution(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    /// Checks the distribution against the scale that governs it.
    pub fn validate_for(&self, scale: &ScoreScale) -> Result<(), ValidationError> {
        self.validate()?;
        if self.support != scale.admissible() {
            return Err(ValidationError::Distribution(format!(
                "support {:?} is not the admissible set of the scale",
                self.support
            )));
        }
        Ok(())
    }

    pub fn prob_of(&self, score: i64) -> f64 {
        self.support
            .iter()
            .position(|&s| s == score)
            .map(|i| self.probs[i])
            .unwrap_or(0.0)
    }
}

/// Expected score `Σ p(s)·s` of a distribution.
///
/// The result is clamped to the support's range so rounding in the sum can
/// never push it outside the scale.
pub fn weighted_score(dist: &ScoreDistribution) -> Result<f64, ValidationError> {
    dist.validate()?;
    let total: f64 = dist
        .support
        .iter()
        .zip(&dist.probs)
        .map(|(&s, &p)| p * s as f64)
        .sum();
    let lo = *dist.support.iter().min().expect("non-empty support") as f64;
    let hi = *dist.support.iter().max().expect("non-empty support") as f64;
    Ok(total.clamp(lo, hi))
}
