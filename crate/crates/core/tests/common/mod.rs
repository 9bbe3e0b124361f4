#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeMap;
use std::path::PathBuf;

use geval::llm::{mock_from_script, Backend, Script, ScriptEntry};
use geval::model::fingerprint;
use geval::presets;
use geval::prompt::{assemble, builtin_template, PromptTemplate};
use geval::{CriterionSpec, EvalRecord};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn steps() -> Vec<String> {
    vec![
        "Read the news article carefully and identify the main topic and key points.".into(),
        "Read the summary and compare it to the news article.".into(),
        "Assign a score on the scale given in the criteria.".into(),
    ]
}

pub fn summeval_criteria() -> Vec<CriterionSpec> {
    presets::summeval()
        .criteria
        .into_iter()
        .map(|c| c.with_steps(steps()))
        .collect()
}

pub fn criterion(name: &str) -> CriterionSpec {
    summeval_criteria().into_iter().find(|c| c.name == name).unwrap()
}

pub fn summarization() -> PromptTemplate {
    builtin_template("summarization").unwrap()
}

pub fn templates_for(criteria: &[CriterionSpec], template: &PromptTemplate) -> BTreeMap<String, PromptTemplate> {
    criteria.iter().map(|c| (c.name.clone(), template.clone())).collect()
}

pub fn record(id: &str, doc: &str, system: &str, output: &str, ratings: &[(&str, f64)]) -> EvalRecord {
    EvalRecord {
        record_id: id.into(),
        doc_id: doc.into(),
        system_id: system.into(),
        source: format!("Source article for {doc}."),
        extra_context: None,
        output: output.into(),
        human_ratings: ratings.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        provenance: "test".into(),
    }
}

pub fn prompt_fp(template: &PromptTemplate, c: &CriterionSpec, r: &EvalRecord, cot: bool) -> String {
    assemble(template, c, r, cot).unwrap().fingerprint
}

pub fn texts(items: &[&str]) -> ScriptEntry {
    ScriptEntry::texts(items.iter().copied())
}

/// `count` copies of each text, in order.
pub fn repeated(parts: &[(&str, usize)]) -> ScriptEntry {
    ScriptEntry::texts(parts.iter().flat_map(|(t, n)| std::iter::repeat_n(*t, *n)))
}

pub fn backend(script: Script) -> Backend {
    mock_from_script(script).unwrap()
}

pub fn key(text: &str) -> String {
    fingerprint(text)
}
