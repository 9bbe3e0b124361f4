use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::Value;

use super::{describe_map, BenchmarkError, DatasetDescriptor};
use crate::jsonl::read_jsonl;
use crate::model::{validate_record_aspects, EvalRecord};

struct Ctx<'a> {
    desc: &'a DatasetDescriptor,
    map: BTreeMap<String, String>,
}

impl<'a> Ctx<'a> {
    fn new(desc: &'a DatasetDescriptor) -> Self {
        Self {
            desc,
            map: desc.effective_aspect_map(),
        }
    }

    fn path(&self) -> String {
        self.desc.path.display().to_string()
    }

    fn schema(&self, location: impl Into<String>, message: impl Into<String>) -> BenchmarkError {
        BenchmarkError::Schema {
            path: self.path(),
            location: location.into(),
            message: message.into(),
        }
    }

    fn finish(&self, location: String, rec: EvalRecord) -> Result<EvalRecord, BenchmarkError> {
        let aspects: Vec<String> = if self.map.is_empty() {
            rec.human_ratings.keys().cloned().collect()
        } else {
            self.map.values().cloned().collect()
        };
        let names: Vec<&str> = aspects.iter().map(String::as_str).collect();
        validate_record_aspects(rec, &names).map_err(|source| BenchmarkError::Invalid {
            path: self.path(),
            location,
            source,
        })
    }

    fn aggregate(&self, location: &str, aspect: &str, values: &[f64]) -> Result<f64, BenchmarkError> {
        if values.is_empty() {
            return Err(self.schema(location, format!("no annotator ratings for `{aspect}`")));
        }
        Ok(self.desc.aggregation.apply(values))
    }
}

fn read_text(desc: &DatasetDescriptor) -> Result<String, BenchmarkError> {
    std::fs::read_to_string(&desc.path).map_err(|e| BenchmarkError::Io {
        path: desc.path.display().to_string(),
        message: e.to_string(),
    })
}

#[derive(Deserialize)]
struct SummEvalLine {
    id: String,
    model_id: String,
    decoded: String,
    text: String,
    expert_annotations: Vec<BTreeMap<String, f64>>,
}

pub(super) fn summeval(desc: &DatasetDescriptor) -> Result<Vec<EvalRecord>, BenchmarkError> {
    let ctx = Ctx::new(desc);
    let mut out = Vec::new();
    for (line_no, line) in read_jsonl::<SummEvalLine>(&desc.path)? {
        let loc = format!("line {line_no}");
        let mut ratings = BTreeMap::new();
        for (aspect, criterion) in &ctx.map {
            let mut values = Vec::with_capacity(line.expert_annotations.len());
            for (k, annotation) in line.expert_annotations.iter().enumerate() {
                let v = annotation
                    .get(aspect)
                    .ok_or_else(|| ctx.schema(&loc, format!("annotator {k} has no `{aspect}` rating")))?;
                values.push(*v);
            }
            ratings.insert(criterion.clone(), ctx.aggregate(&loc, aspect, &values)?);
        }
        let rec = EvalRecord {
            record_id: format!("{}/{}", line.id, line.model_id),
            doc_id: line.id,
            system_id: line.model_id,
            source: line.text,
            extra_context: None,
            output: line.decoded,
            human_ratings: ratings,
            provenance: desc.name.clone(),
        };
        out.push(ctx.finish(loc, rec)?);
    }
    Ok(out)
}

#[derive(Deserialize)]
struct UsrDialogue {
    context: String,
    fact: String,
    responses: Vec<UsrResponse>,
}

#[derive(Deserialize)]
struct UsrResponse {
    response: String,
    model: String,
    #[serde(flatten)]
    ratings: BTreeMap<String, Value>,
}

pub(super) fn topical_chat_usr(desc: &DatasetDescriptor) -> Result<Vec<EvalRecord>, BenchmarkError> {
    let ctx = Ctx::new(desc);
    let text = read_text(desc)?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let dialogues: Vec<UsrDialogue> = serde_json::from_str(&text).map_err(|e| {
        ctx.schema(format!("line {}, column {}", e.line(), e.column()), e.to_string())
    })?;
    let mut out = Vec::new();
    for (i, dialogue) in dialogues.into_iter().enumerate() {
        for (j, resp) in dialogue.responses.into_iter().enumerate() {
            let loc = format!("dialogue {i}, response {j}");
            let mut ratings = BTreeMap::new();
            for (aspect, criterion) in &ctx.map {
                let raw = resp
                    .ratings
                    .get(aspect)
                    .ok_or_else(|| ctx.schema(&loc, format!("missing aspect `{aspect}`")))?;
                let values = numbers(raw).ok_or_else(|| {
                    ctx.schema(&loc, format!("aspect `{aspect}` is not a number or list of numbers"))
                })?;
                ratings.insert(criterion.clone(), ctx.aggregate(&loc, aspect, &values)?);
            }
            let rec = EvalRecord {
                record_id: format!("tc-{i}/{}", resp.model),
                doc_id: format!("tc-{i}"),
                system_id: resp.model,
                source: dialogue.context.clone(),
                extra_context: Some(dialogue.fact.clone()),
                output: resp.response,
                human_ratings: ratings,
                provenance: desc.name.clone(),
            };
            out.push(ctx.finish(loc, rec)?);
        }
    }
    Ok(out)
}

fn numbers(v: &Value) -> Option<Vec<f64>> {
    match v {
        Value::Number(n) => Some(vec![n.as_f64()?]),
        Value::Array(items) => items.iter().map(Value::as_f64).collect(),
        _ => None,
    }
}

#[derive(Deserialize)]
struct QagsLine {
    article: String,
    summary_sentences: Vec<QagsSentence>,
}

#[derive(Deserialize)]
struct QagsSentence {
    sentence: String,
    responses: Vec<QagsResponse>,
}

#[derive(Deserialize)]
struct QagsResponse {
    response: String,
}

/// Per-summary consistency: the fraction of sentences whose aggregated
/// annotator label (yes = 1, no = 0) exceeds one half.
pub(super) fn qags(desc: &DatasetDescriptor) -> Result<Vec<EvalRecord>, BenchmarkError> {
    let ctx = Ctx::new(desc);
    let (aspect, criterion) = ctx
        .map
        .iter()
        .next()
        .map(|(a, c)| (a.clone(), c.clone()))
        .ok_or_else(|| BenchmarkError::UnknownAspect {
            aspect: "consistency".into(),
            aspect_map: describe_map(&ctx.map),
        })?;
    let mut out = Vec::new();
    for (index, (line_no, line)) in read_jsonl::<QagsLine>(&desc.path)?.into_iter().enumerate() {
        let loc = format!("line {line_no}");
        if line.summary_sentences.is_empty() {
            return Err(ctx.schema(&loc, "summary has no sentences"));
        }
        let mut consistent = 0usize;
        for (s, sentence) in line.summary_sentences.iter().enumerate() {
            let labels = sentence
                .responses
                .iter()
                .map(|r| match r.response.trim().to_ascii_lowercase().as_str() {
                    "yes" => Ok(1.0),
                    "no" => Ok(0.0),
                    other => Err(ctx.schema(&loc, format!("sentence {s}: response `{other}` is not yes/no"))),
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if ctx.aggregate(&loc, &aspect, &labels)? > 0.5 {
                consistent += 1;
            }
        }
        let total = line.summary_sentences.len();
        let output = line
            .summary_sentences
            .iter()
            .map(|s| s.sentence.trim())
            .collect::<Vec<_>>()
            .join(" ");
        let id = format!("{}-{index}", desc.name);
        let rec = EvalRecord {
            record_id: id.clone(),
            doc_id: id,
            system_id: "summary".into(),
            source: line.article,
            extra_context: None,
            output,
            human_ratings: BTreeMap::from([(criterion.clone(), consistent as f64 / total as f64)]),
            provenance: desc.name.clone(),
        };
        out.push(ctx.finish(loc, rec)?);
    }
    Ok(out)
}

pub(super) fn normalized(desc: &DatasetDescriptor) -> Result<Vec<EvalRecord>, BenchmarkError> {
    let ctx = Ctx::new(desc);
    let mut out = Vec::new();
    for (line_no, mut rec) in read_jsonl::<EvalRecord>(&desc.path)? {
        if !ctx.map.is_empty() {
            let mut renamed = BTreeMap::new();
            for (aspect, value) in rec.human_ratings {
                let criterion = ctx.map.get(&aspect).ok_or_else(|| BenchmarkError::UnknownAspect {
                    aspect: aspect.clone(),
                    aspect_map: describe_map(&ctx.map),
                })?;
                renamed.insert(criterion.clone(), value);
            }
            rec.human_ratings = renamed;
        }
        out.push(ctx.finish(format!("line {line_no}"), rec)?);
    }
    Ok(out)
}

