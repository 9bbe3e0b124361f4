use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{parse_score, JudgeError};
use crate::llm::{GenerationResponse, TokenLogprob};
use crate::model::{Estimation, ScoreDistribution, ScoreScale};

/// What to do with responses that do not parse to an admissible score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutOfScalePolicy {
    #[default]
    DiscardAndRenormalize,
    Error,
}

/// Relative frequencies of the parsed scores among sampled responses.
pub fn estimate_distribution_sampling(
    responses: &[String],
    scale: &ScoreScale,
    policy: OutOfScalePolicy,
) -> Result<ScoreDistribution, JudgeError> {
    if responses.is_empty() {
        return Err(JudgeError::Estimation("no responses to estimate from".into()));
    }
    let mut counts = BTreeMap::new();
    for text in responses {
        match parse_score(text, scale) {
            Ok(parsed) => *counts.entry(parsed.value).or_insert(0usize) += 1,
            Err(e) if policy == OutOfScalePolicy::Error => return Err(e),
            Err(_) => {}
        }
    }
    if counts.is_empty() {
        return Err(JudgeError::Estimation(format!(
            "none of {} responses contained an admissible score",
            responses.len()
        )));
    }
    Ok(ScoreDistribution::from_counts(scale, &counts)?)
}

/// Score implied by a single token, if its stripped text is an admissible
/// score (or, on binary scales, one of the labels).
fn token_score(token: &str, scale: &ScoreScale) -> Option<i64> {
    let token = token.trim();
    match scale {
        ScoreScale::IntegerRange { .. } => {
            if token.is_empty() || !token.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let value: i64 = token.parse().ok()?;
            // "04" is not the decimal rendering of 4
            (scale.contains(value) && value.to_string() == token).then_some(value)
        }
        ScoreScale::LabeledBinary { positive, negative } => {
            if token.eq_ignore_ascii_case(positive) {
                Some(1)
            } else if token.eq_ignore_ascii_case(negative) {
                Some(0)
            } else {
                None
            }
        }
    }
}

/// Index of the token covering byte `offset` of `text`, provided the tokens
/// concatenate to `text`.
fn token_at_offset(tokens: &[TokenLogprob], text: &str, offset: usize) -> Option<usize> {
    let joined: String = tokens.iter().map(|t| t.token.as_str()).collect();
    if joined != text {
        return None;
    }
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        let end = start + t.token.len();
        if (start..end).contains(&offset) {
            return Some(i);
        }
        start = end;
    }
    None
}

/// Distribution from the top-k alternatives at the position where the greedy
/// completion emitted its score.
///
/// Only alternatives that render an admissible score are kept and their
/// probabilities renormalized. With none left, the distribution collapses to
/// the parsed score and is flagged degenerate.
pub fn estimate_distribution_logprobs(
    response: &GenerationResponse,
    scale: &ScoreScale,
) -> Result<ScoreDistribution, JudgeError> {
    let tables = response
        .token_logprobs
        .as_ref()
        .ok_or(JudgeError::MissingLogprobs)?;
    let text = response
        .completions
        .first()
        .ok_or_else(|| JudgeError::Estimation("response has no completions".into()))?;
    let tokens = tables.first().ok_or(JudgeError::MissingLogprobs)?;
    let parsed = parse_score(text, scale)?;

    let position = token_at_offset(tokens, text, parsed.match_span.start).or_else(|| {
        tokens
            .iter()
            .position(|t| token_score(&t.token, scale) == Some(parsed.value))
    });
    let Some(position) = position else {
        return Ok(ScoreDistribution::degenerate(scale, parsed.value)?);
    };

    let emitted = &tokens[position];
    let alternatives: Vec<(&str, f64)> = if emitted.top_logprobs.is_empty() {
        vec![(emitted.token.as_str(), emitted.logprob)]
    } else {
        emitted
            .top_logprobs
            .iter()
            .map(|a| (a.token.as_str(), a.logprob))
            .collect()
    };
    let mut weights: BTreeMap<i64, f64> = BTreeMap::new();
    for (token, logprob) in alternatives {
        if let Some(score) = token_score(token, scale) {
            *weights.entry(score).or_insert(0.0) += logprob.exp();
        }
    }
    if weights.values().sum::<f64>() <= 0.0 {
        return Ok(ScoreDistribution::degenerate(scale, parsed.value)?);
    }
    Ok(ScoreDistribution::from_weights(scale, &weights, Estimation::Logprobs)?)
}
