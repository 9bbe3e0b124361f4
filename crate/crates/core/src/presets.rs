//! Built-in tasks: criteria definitions and the template each criterion uses.
//!
//! Criteria ship without evaluation steps; they are generated on first use
//! (or supplied by the user).

use std::collections::BTreeMap;

use crate::model::{CriterionSpec, ScoreScale};

pub const SUMMARIZATION_INTRO: &str = "You will be given one summary written for a news article.\n\nYour task is to rate the summary on one metric.\n\nPlease make sure you read and understand these instructions carefully. Please keep this document open while reviewing, and refer to it as needed.";

pub const DIALOGUE_INTRO: &str = "You will be given a conversation between two individuals. You will then be given one potential response for the next turn in the conversation. The response concerns an interesting fact, which will be provided as well.\n\nYour task is to rate the responses on one metric.\n\nPlease make sure you read and understand these instructions carefully. Please keep this document open while reviewing, and refer to it as needed.";

pub const HALLUCINATION_INTRO: &str = "Human Evaluation of Text Summarization Systems:";

/// A named set of criteria and their template assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskPreset {
    pub name: &'static str,
    pub criteria: Vec<CriterionSpec>,
    /// criterion name → template id
    pub templates: BTreeMap<String, String>,
}

impl TaskPreset {
    pub fn criterion(&self, name: &str) -> Option<&CriterionSpec> {
        self.criteria.iter().find(|c| c.name == name)
    }
}

fn range(min: i64, max: i64) -> ScoreScale {
    ScoreScale::IntegerRange { min, max }
}

fn preset(name: &'static str, template: &str, criteria: Vec<CriterionSpec>) -> TaskPreset {
    let templates = criteria
        .iter()
        .map(|c| (c.name.clone(), template.to_string()))
        .collect();
    TaskPreset {
        name,
        criteria,
        templates,
    }
}

pub fn summeval() -> TaskPreset {
    let c = |name: &str, scale, def: &str| CriterionSpec::new(name, def, scale, SUMMARIZATION_INTRO);
    preset(
        "summeval",
        "summarization",
        vec![
            c(
                "coherence",
                range(1, 5),
                "the collective quality of all sentences. We align this dimension with the DUC quality question of structure and coherence whereby \"the summary should be well-structured and well-organized. The summary should not just be a heap of related information, but should build from sentence to sentence to a coherent body of information about a topic.\"",
            ),
            c(
                "consistency",
                range(1, 5),
                "the factual alignment between the summary and the summarized source. A factually consistent summary contains only statements that are entailed by the source document. Annotators were also asked to penalize summaries that contained hallucinated facts.",
            ),
            c(
                "fluency",
                range(1, 3),
                "the quality of the summary in terms of grammar, spelling, punctuation, word choice, and sentence structure.\n\n- 1: Poor. The summary has many errors that make it hard to understand or sound unnatural.\n- 2: Fair. The summary has some errors that affect the clarity or smoothness of the text, but the main points are still comprehensible.\n- 3: Good. The summary has few or no errors and is easy to read and follow.",
            ),
            c(
                "relevance",
                range(1, 5),
                "selection of important content from the source. The summary should include only important information from the source document. Annotators were instructed to penalize summaries which contained redundancies and excess information.",
            ),
        ],
    )
}

pub fn topical_chat() -> TaskPreset {
    let c = |name: &str, scale, def: &str| CriterionSpec::new(name, def, scale, DIALOGUE_INTRO);
    preset(
        "topical_chat",
        "dialogue",
        vec![
            c(
                "naturalness",
                range(1, 3),
                "Is the response naturally written?\n\n- A score of 1 (very unnatural) means the response is not something a person would naturally say.\n\n- A score of 2 (somewhat natural) means the response is plausible but awkward in places.\n\n- A score of 3 (very natural) means the response reads like something a person would naturally say.",
            ),
            c(
                "coherence",
                range(1, 3),
                "Does the response serve as a valid continuation of the conversation history?\n\n- A score of 1 (no) means that the response drastically changes topic or ignores the conversation history.\n\n- A score of 2 (somewhat) means the response refers to the conversation history in a limited capacity (e.g., in a generic way) and shifts the conversation topic.\n\n- A score of 3 (yes) means the response is on topic and strongly acknowledges the conversation history.",
            ),
            c(
                "engagingness",
                range(1, 3),
                "Is the response dull/interesting?\n\n- A score of 1 (dull) means that the response is generic and dull.\n\n- A score of 2 (somewhat interesting) means the response is somewhat interesting and could engage you in the conversation (e.g., an opinion, thought)\n\n- A score of 3 (interesting) means the response is very interesting or presents an interesting fact",
            ),
            c(
                "groundedness",
                range(0, 1),
                "Given the fact that this response is conditioned on, how well does the response use that fact?\n\n- A score of 0 (no) means the response does not mention or refer to the fact at all.\n\n- A score of 1 (yes) means the response uses the fact well.",
            ),
        ],
    )
}

pub fn qags() -> TaskPreset {
    preset(
        "qags",
        "hallucination",
        vec![CriterionSpec::new(
            "consistency",
            "Does the summary untruthful or misleading facts that are not supported by the source text?",
            ScoreScale::yes_no(),
            HALLUCINATION_INTRO,
        )
        .with_display_name("Factual Consistency")],
    )
}

pub fn by_name(name: &str) -> Option<TaskPreset> {
    match name {
        "summeval" => Some(summeval()),
        "topical_chat" => Some(topical_chat()),
        "qags" => Some(qags()),
        _ => None,
    }
}

pub const PRESET_NAMES: [&str; 3] = ["summeval", "topical_chat", "qags"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_criteria;
    use crate::prompt::builtin_template;

    #[test]
    fn presets_are_valid_and_templates_exist() {
        for name in PRESET_NAMES {
            let p = by_name(name).unwrap();
            validate_criteria(&p.criteria).unwrap();
            for c in &p.criteria {
                let id = &p.templates[&c.name];
                assert!(builtin_template(id).is_some(), "{id}");
            }
        }
        assert!(by_name("nope").is_none());
    }
}
