use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::stats::{correlate, Coefficient, CorrelationError, TauVariant};
use super::MetaevalError;
use crate::model::{EvalRecord, JudgeResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    /// Correlate within each document across systems, then average.
    SummaryLevel,
    /// One coefficient over all dialogue turns.
    TurnLevel,
    /// One coefficient over all pairs.
    Pooled,
}

impl AggregationMode {
    pub fn name(self) -> &'static str {
        match self {
            AggregationMode::SummaryLevel => "summary_level",
            AggregationMode::TurnLevel => "turn_level",
            AggregationMode::Pooled => "pooled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UndefinedPolicy {
    /// Leave the group out of the mean and count it.
    #[default]
    Skip,
    /// Let the group contribute 0.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationSpec {
    pub mode: AggregationMode,
    #[serde(default)]
    pub undefined_policy: UndefinedPolicy,
    #[serde(default)]
    pub tau_variant: TauVariant,
}

impl AggregationSpec {
    pub fn new(mode: AggregationMode) -> Self {
        Self {
            mode,
            undefined_policy: UndefinedPolicy::default(),
            tau_variant: TauVariant::default(),
        }
    }
}

/// A judge score joined with the human rating of the same record.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub record_id: String,
    pub doc_id: String,
    pub metric: f64,
    pub human: f64,
}

/// Which records a column draws from and how judge scores are oriented.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairFilter {
    /// Only records with exactly this provenance.
    pub provenance: Option<String>,
    /// Use `1 - score`, for judges that rate the opposite pole of the human scale.
    pub invert: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub value: f64,
    /// Groups contributing to the mean (zeroed groups included).
    pub groups_used: usize,
    /// Groups left out under the skip policy.
    pub groups_skipped: usize,
    /// Groups whose coefficient was undefined, whatever the policy.
    pub groups_undefined: usize,
    pub n_pairs: usize,
}

/// Joins results for `aspect` with the human ratings of their records.
///
/// Results are matched on `criterion == aspect`. Records without a result are
/// left out (their failures live in the manifest); a result without a record
/// is an error.
pub fn join_pairs(
    results: &[JudgeResult],
    records: &[EvalRecord],
    aspect: &str,
    filter: &PairFilter,
) -> Result<Vec<ScoredPair>, MetaevalError> {
    let by_id: HashMap<&str, &EvalRecord> = records.iter().map(|r| (r.record_id.as_str(), r)).collect();
    let mut pairs = Vec::new();
    for result in results.iter().filter(|r| r.criterion == aspect) {
        let record = by_id
            .get(result.record_id.as_str())
            .ok_or_else(|| MetaevalError::UnknownRecord(result.record_id.clone()))?;
        if filter.provenance.as_ref().is_some_and(|p| *p != record.provenance) {
            continue;
        }
        let human = *record
            .human_ratings
            .get(aspect)
            .ok_or_else(|| MetaevalError::MissingAspect {
                record_id: record.record_id.clone(),
                aspect: aspect.to_string(),
            })?;
        let metric = if filter.invert {
            1.0 - result.final_score
        } else {
            result.final_score
        };
        pairs.push(ScoredPair {
            record_id: record.record_id.clone(),
            doc_id: record.doc_id.clone(),
            metric,
            human,
        });
    }
    if pairs.is_empty() {
        return Err(MetaevalError::NoPairs(aspect.to_string()));
    }
    Ok(pairs)
}

fn coefficient_of(pairs: &[&ScoredPair], coef: Coefficient, variant: TauVariant) -> Result<f64, CorrelationError> {
    let x: Vec<f64> = pairs.iter().map(|p| p.metric).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.human).collect();
    correlate(coef, &x, &y, variant)
}

/// Aggregates one coefficient over joined pairs.
pub fn aggregate_pairs(
    pairs: &[ScoredPair],
    aspect: &str,
    coef: Coefficient,
    spec: &AggregationSpec,
) -> Result<Aggregate, MetaevalError> {
    let groups: BTreeMap<&str, Vec<&ScoredPair>> = match spec.mode {
        AggregationMode::SummaryLevel => {
            let mut g: BTreeMap<&str, Vec<&ScoredPair>> = BTreeMap::new();
            for p in pairs {
                g.entry(p.doc_id.as_str()).or_default().push(p);
            }
            g
        }
        AggregationMode::TurnLevel | AggregationMode::Pooled => {
            BTreeMap::from([("", pairs.iter().collect())])
        }
    };

    let mut values = Vec::with_capacity(groups.len());
    let (mut skipped, mut undefined) = (0, 0);
    for members in groups.values() {
        let value = match coefficient_of(members, coef, spec.tau_variant) {
            Ok(v) => Some(v),
            Err(CorrelationError::Undefined | CorrelationError::TooShort(_)) => None,
            Err(e) => return Err(e.into()),
        };
        match (value, spec.undefined_policy) {
            (Some(v), _) => values.push(v),
            (None, UndefinedPolicy::Zero) => {
                undefined += 1;
                values.push(0.0);
            }
            (None, UndefinedPolicy::Skip) => {
                undefined += 1;
                skipped += 1;
            }
        }
    }
    if values.is_empty() {
        return Err(MetaevalError::NoDefinedGroups {
            aspect: aspect.to_string(),
            coefficient: coef,
        });
    }
    Ok(Aggregate {
        value: values.iter().sum::<f64>() / values.len() as f64,
        groups_used: values.len(),
        groups_skipped: skipped,
        groups_undefined: undefined,
        n_pairs: pairs.len(),
    })
}

/// Joins and aggregates in one step, over all records.
pub fn aggregate_correlation(
    results: &[JudgeResult],
    records: &[EvalRecord],
    aspect: &str,
    coef: Coefficient,
    spec: &AggregationSpec,
) -> Result<Aggregate, MetaevalError> {
    let pairs = join_pairs(results, records, aspect, &PairFilter::default())?;
    aggregate_pairs(&pairs, aspect, coef, spec)
}
