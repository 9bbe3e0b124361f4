//! Judge prompt assembly and automatic evaluation-step generation.

mod cot;
mod template;

use serde::{Deserialize, Serialize};

use crate::model::{fingerprint, CriterionSpec, EvalRecord, ScoreScale};

pub use cot::{cot_prompt, parse_steps, CotCache, CotEntry, CotError, CotOutcome};
pub use template::{
    builtin_template, load_builtin_templates, Placeholder, PromptTemplate, TemplateStyle,
    ANSWER_SLOT, FORM_HEADING,
};

/// Heading of the chain-of-thought block.
pub const STEPS_HEADING: &str = "Evaluation Steps:";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PromptError {
    #[error("unknown placeholder {{{{{0}}}}}")]
    UnknownPlaceholder(String),
    #[error("no value for placeholder {placeholder} in record {record_id}")]
    MissingValue {
        placeholder: Placeholder,
        record_id: String,
    },
    #[error("criterion `{0}` has no evaluation steps; generate or supply them first")]
    MissingSteps(String),
    #[error("template style: {0}")]
    Style(String),
    #[error("template metadata: {0}")]
    Metadata(String),
    #[error("template io: {0}")]
    Io(String),
}

/// Which inputs produced an assembled prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptParts {
    pub template_id: String,
    pub criterion: String,
    pub record_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssembledPrompt {
    pub text: String,
    pub fingerprint: String,
    pub parts: PromptParts,
    pub includes_cot: bool,
}

/// `"Coherence (1-5) - definition"` for ranges, `"Name: definition"` for binary scales.
pub fn render_criteria(criterion: &CriterionSpec) -> String {
    match &criterion.scale {
        ScoreScale::IntegerRange { min, max } => format!(
            "{} ({min}-{max}) - {}",
            criterion.title(),
            criterion.display_definition
        ),
        ScoreScale::LabeledBinary { .. } => {
            format!("{}: {}", criterion.title(), criterion.display_definition)
        }
    }
}

/// The full steps block including its heading and the blank lines that
/// separate it from what follows.
pub fn render_steps(steps: &[String]) -> String {
    let numbered: Vec<String> = steps
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {}", i + 1, s.trim()))
        .collect();
    format!("{STEPS_HEADING}\n\n{}\n\n\n", numbered.join("\n"))
}

pub fn render_form(criterion: &CriterionSpec) -> String {
    format!("- {}:", criterion.title())
}

/// Fills `template` for one criterion and record.
///
/// With `include_cot` false the steps slot renders empty, so the result
/// differs from the CoT prompt only by the steps block.
pub fn assemble(
    template: &PromptTemplate,
    criterion: &CriterionSpec,
    record: &EvalRecord,
    include_cot: bool,
) -> Result<AssembledPrompt, PromptError> {
    let used = template.placeholders()?;
    let includes_cot = include_cot && used.contains(&Placeholder::Steps);
    let steps = if includes_cot {
        let steps = criterion
            .evaluation_steps
            .as_ref()
            .ok_or_else(|| PromptError::MissingSteps(criterion.name.clone()))?;
        render_steps(steps)
    } else {
        String::new()
    };

    let value = |p: Placeholder| -> Result<String, PromptError> {
        Ok(match p {
            Placeholder::TaskIntro => criterion.task_intro.clone(),
            Placeholder::Criteria => render_criteria(criterion),
            Placeholder::Steps => steps.clone(),
            Placeholder::Source => record.source.clone(),
            Placeholder::ExtraContext => {
                record
                    .extra_context
                    .clone()
                    .ok_or_else(|| PromptError::MissingValue {
                        placeholder: p,
                        record_id: record.record_id.clone(),
                    })?
            }
            Placeholder::Output => record.output.clone(),
            Placeholder::Form => render_form(criterion),
        })
    };

    // Single pass: braces inside substituted values are never re-expanded.
    let mut text = String::with_capacity(template.body.len() + record.source.len());
    let mut last = 0;
    for caps in template::placeholder_regex().captures_iter(&template.body) {
        let whole = caps.get(0).expect("match");
        let placeholder: Placeholder = caps[1].parse()?;
        text.push_str(&template.body[last..whole.start()]);
        text.push_str(&value(placeholder)?);
        last = whole.end();
    }
    text.push_str(&template.body[last..]);

    Ok(AssembledPrompt {
        fingerprint: fingerprint(&text),
        text,
        parts: PromptParts {
            template_id: template.template_id.clone(),
            criterion: criterion.name.clone(),
            record_id: record.record_id.clone(),
        },
        includes_cot,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::presets;

    fn record() -> EvalRecord {
        EvalRecord {
            record_id: "r1".into(),
            doc_id: "d1".into(),
            system_id: "s1".into(),
            source: "ARTICLE {{output}} TEXT".into(),
            extra_context: None,
            output: "SUMMARY".into(),
            human_ratings: BTreeMap::new(),
            provenance: "test".into(),
        }
    }

    fn coherence_with_steps() -> CriterionSpec {
        presets::summeval()
            .criterion("coherence")
            .unwrap()
            .clone()
            .with_steps(vec!["Read.".into(), "Score.".into()])
    }

    #[test]
    fn deterministic_fingerprint() {
        let t = builtin_template("summarization").unwrap();
        let a = assemble(&t, &coherence_with_steps(), &record(), true).unwrap();
        let b = assemble(&t, &coherence_with_steps(), &record(), true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint, fingerprint(&a.text));
    }

    #[test]
    fn values_are_not_re_expanded() {
        let t = builtin_template("summarization").unwrap();
        let p = assemble(&t, &coherence_with_steps(), &record(), true).unwrap();
        assert!(p.text.contains("ARTICLE {{output}} TEXT"));
    }

    #[test]
    fn dialogue_requires_fact() {
        let t = builtin_template("dialogue").unwrap();
        let c = presets::topical_chat().criterion("engagingness").unwrap().clone();
        let err = assemble(&t, &c, &record(), false).unwrap_err();
        assert!(err.to_string().contains("{{extra_context}}"), "{err}");
        assert!(err.to_string().contains("r1"));
    }

    #[test]
    fn cot_requires_steps() {
        let t = builtin_template("summarization").unwrap();
        let c = presets::summeval().criterion("coherence").unwrap().clone();
        assert_eq!(
            assemble(&t, &c, &record(), true).unwrap_err(),
            PromptError::MissingSteps("coherence".into())
        );
        let p = assemble(&t, &c, &record(), false).unwrap();
        assert!(!p.includes_cot);
        assert!(!p.text.contains(STEPS_HEADING));
    }

    #[test]
    fn no_cot_removes_exactly_the_steps_block() {
        let t = builtin_template("summarization").unwrap();
        let c = coherence_with_steps();
        let with = assemble(&t, &c, &record(), true).unwrap();
        let without = assemble(&t, &c, &record(), false).unwrap();
        let block = render_steps(c.evaluation_steps.as_ref().unwrap());
        assert_eq!(with.text.replacen(&block, "", 1), without.text);
    }

    #[test]
    fn binary_template_ignores_cot_flag() {
        let t = builtin_template("hallucination").unwrap();
        let c = presets::qags().criterion("consistency").unwrap().clone();
        let p = assemble(&t, &c, &record(), true).unwrap();
        assert!(!p.includes_cot);
        assert!(p.text.ends_with("Answer:"));
        assert!(p.text.starts_with("Human Evaluation of Text Summarization Systems:"));
    }
}
