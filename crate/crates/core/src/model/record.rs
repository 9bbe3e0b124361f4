use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CriterionSpec, ValidationError};

/// One benchmark item in normalized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub record_id: String,
    pub doc_id: String,
    pub system_id: String,
    pub source: String,
    pub extra_context: Option<String>,
    pub output: String,
    pub human_ratings: BTreeMap<String, f64>,
    pub provenance: String,
}

/// Checks a record against the criteria of its task.
///
/// Returns the record unchanged on success.
pub fn validate_record(
    rec: EvalRecord,
    criteria: &[CriterionSpec],
) -> Result<EvalRecord, ValidationError> {
    let names: Vec<&str> = criteria.iter().map(|c| c.name.as_str()).collect();
    validate_record_aspects(rec, &names)
}

/// Same as [`validate_record`], against a bare list of aspect names.
pub fn validate_record_aspects(
    rec: EvalRecord,
    known_aspects: &[&str],
) -> Result<EvalRecord, ValidationError> {
    let missing = |field: &'static str| ValidationError::Record {
        record_id: rec.record_id.clone(),
        message: format!("field `{field}` is empty"),
    };
    if rec.record_id.trim().is_empty() {
        return Err(ValidationError::Record {
            record_id: "<empty>".into(),
            message: "field `record_id` is empty".into(),
        });
    }
    let required = [
        ("doc_id", &rec.doc_id),
        ("system_id", &rec.system_id),
        ("source", &rec.source),
        ("output", &rec.output),
        ("provenance", &rec.provenance),
    ];
    if let Some((field, _)) = required.iter().find(|(_, v)| v.trim().is_empty()) {
        return Err(missing(field));
    }
    if rec.extra_context.as_deref().is_some_and(|c| c.trim().is_empty()) {
        return Err(missing("extra_context"));
    }
    for (aspect, value) in &rec.human_ratings {
        if !known_aspects.contains(&aspect.as_str()) {
            return Err(ValidationError::Record {
                record_id: rec.record_id.clone(),
                message: format!(
                    "unknown aspect `{aspect}`; known aspects: {}",
                    known_aspects.join(", ")
                ),
            });
        }
        if !value.is_finite() {
            return Err(ValidationError::Record {
                record_id: rec.record_id.clone(),
                message: format!("rating for `{aspect}` is not finite"),
            });
        }
    }
    Ok(rec)
}
