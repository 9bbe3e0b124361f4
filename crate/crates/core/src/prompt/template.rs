use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::PromptError;

/// Slots a template body may reference as `{{name}}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placeholder {
    TaskIntro,
    Criteria,
    Steps,
    Source,
    ExtraContext,
    Output,
    Form,
}

impl Placeholder {
    pub const ALL: [Placeholder; 7] = [
        Placeholder::TaskIntro,
        Placeholder::Criteria,
        Placeholder::Steps,
        Placeholder::Source,
        Placeholder::ExtraContext,
        Placeholder::Output,
        Placeholder::Form,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Placeholder::TaskIntro => "task_intro",
            Placeholder::Criteria => "criteria",
            Placeholder::Steps => "steps",
            Placeholder::Source => "source",
            Placeholder::ExtraContext => "extra_context",
            Placeholder::Output => "output",
            Placeholder::Form => "form",
        }
    }
}

impl fmt::Display for Placeholder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{{{}}}}}", self.as_str())
    }
}

impl FromStr for Placeholder {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Placeholder::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| PromptError::UnknownPlaceholder(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateStyle {
    CotFormFilling,
    BinaryQa,
}

/// Heading that introduces the form tail of form-filling templates.
pub const FORM_HEADING: &str = "Evaluation Form (scores ONLY):";
/// Final line of binary QA templates.
pub const ANSWER_SLOT: &str = "Answer:";

pub(crate) fn placeholder_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\}").expect("valid regex"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub template_id: String,
    pub body: String,
    pub style: TemplateStyle,
}

/// Sidecar metadata stored next to a template file.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TemplateMeta {
    template_id: String,
    style: TemplateStyle,
    placeholders: Vec<Placeholder>,
}

impl PromptTemplate {
    pub fn new(
        template_id: impl Into<String>,
        body: impl Into<String>,
        style: TemplateStyle,
    ) -> Result<Self, PromptError> {
        let template = Self {
            template_id: template_id.into(),
            body: body.into(),
            style,
        };
        template.validate()?;
        Ok(template)
    }

    /// Loads `path` and its `.toml` sidecar. One trailing newline of the body
    /// is dropped so files written by editors match the embedded templates.
    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let io = |p: &Path, e: std::io::Error| PromptError::Io(format!("{}: {e}", p.display()));
        let body = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
        let meta_path = path.with_extension("toml");
        let meta = std::fs::read_to_string(&meta_path).map_err(|e| io(&meta_path, e))?;
        Self::from_parts(&body, &meta)
    }

    pub(crate) fn from_parts(body: &str, meta: &str) -> Result<Self, PromptError> {
        let meta: TemplateMeta =
            toml::from_str(meta).map_err(|e| PromptError::Metadata(e.to_string()))?;
        let body = body.strip_suffix('\n').unwrap_or(body);
        let template = Self::new(meta.template_id, body, meta.style)?;
        let declared: BTreeSet<Placeholder> = meta.placeholders.into_iter().collect();
        let found = template.placeholders()?;
        if declared != found {
            return Err(PromptError::Metadata(format!(
                "template `{}` declares {:?} but its body uses {:?}",
                template.template_id, declared, found
            )));
        }
        Ok(template)
    }

    /// Distinct placeholders referenced by the body.
    pub fn placeholders(&self) -> Result<BTreeSet<Placeholder>, PromptError> {
        placeholder_regex()
            .captures_iter(&self.body)
            .map(|c| c[1].parse())
            .collect()
    }

    pub fn uses(&self, placeholder: Placeholder) -> bool {
        self.placeholders()
            .map(|set| set.contains(&placeholder))
            .unwrap_or(false)
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if self.template_id.trim().is_empty() {
            return Err(PromptError::Metadata("template_id is empty".into()));
        }
        let found = self.placeholders()?;
        let tail = self.body.trim_end();
        match self.style {
            TemplateStyle::CotFormFilling => {
                if !self.body.contains(FORM_HEADING) || !tail.ends_with("{{form}}") {
                    return Err(PromptError::Style(format!(
                        "form-filling template `{}` must contain \"{FORM_HEADING}\" and end with {{{{form}}}}",
                        self.template_id
                    )));
                }
            }
            TemplateStyle::BinaryQa => {
                if !tail.ends_with(ANSWER_SLOT) {
                    return Err(PromptError::Style(format!(
                        "binary template `{}` must end with \"{ANSWER_SLOT}\"",
                        self.template_id
                    )));
                }
                if found.contains(&Placeholder::Form) {
                    return Err(PromptError::Style(format!(
                        "binary template `{}` cannot use {{{{form}}}}",
                        self.template_id
                    )));
                }
            }
        }
        Ok(())
    }
}

macro_rules! builtin {
    ($name:literal) => {
        (
            include_str!(concat!("../../templates/", $name, ".txt")),
            include_str!(concat!("../../templates/", $name, ".toml")),
        )
    };
}

const BUILTIN: [(&str, &str); 3] = [
    builtin!("summarization"),
    builtin!("dialogue"),
    builtin!("hallucination"),
];

/// Templates embedded in the crate: summarization and dialogue form-filling,
/// and the binary hallucination question.
pub fn load_builtin_templates() -> Vec<PromptTemplate> {
    BUILTIN
        .iter()
        .map(|(body, meta)| PromptTemplate::from_parts(body, meta).expect("builtin template is valid"))
        .collect()
}

pub fn builtin_template(template_id: &str) -> Option<PromptTemplate> {
    load_builtin_templates()
        .into_iter()
        .find(|t| t.template_id == template_id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_load_and_are_stable() {
        let a = load_builtin_templates();
        assert_eq!(a, load_builtin_templates());
        let ids: Vec<&str> = a.iter().map(|t| t.template_id.as_str()).collect();
        assert_eq!(ids, ["summarization", "dialogue", "hallucination"]);
    }

    #[test]
    fn builtin_form_and_answer_tails() {
        let all = load_builtin_templates();
        assert!(all
            .iter()
            .any(|t| t.body.contains("Evaluation Form (scores ONLY)")));
        let binary = all.iter().find(|t| t.style == TemplateStyle::BinaryQa).unwrap();
        assert!(binary.body.ends_with("Answer:"));
        let dialogue = builtin_template("dialogue").unwrap();
        assert!(dialogue.uses(Placeholder::ExtraContext));
        assert!(dialogue.body.contains("Corresponding Fact:"));
    }

    #[test]
    fn unknown_placeholder_rejected() {
        let err = PromptTemplate::new("t", "{{Document}}\nAnswer:", TemplateStyle::BinaryQa).unwrap_err();
        assert!(matches!(err, PromptError::UnknownPlaceholder(ref p) if p == "Document"));
    }

    #[test]
    fn style_tail_enforced() {
        assert!(PromptTemplate::new("t", "{{output}}", TemplateStyle::BinaryQa).is_err());
        assert!(PromptTemplate::new("t", "{{output}}\n{{form}}", TemplateStyle::CotFormFilling).is_err());
        assert!(PromptTemplate::new(
            "t",
            "{{output}}\nEvaluation Form (scores ONLY):\n{{form}}",
            TemplateStyle::CotFormFilling
        )
        .is_ok());
    }

    #[test]
    fn sidecar_must_match_body() {
        let meta = "template_id = \"x\"\nstyle = \"binary_qa\"\nplaceholders = [\"source\"]\n";
        assert!(PromptTemplate::from_parts("{{output}}\nAnswer:\n", meta).is_err());
        let meta = "template_id = \"x\"\nstyle = \"binary_qa\"\nplaceholders = [\"output\"]\n";
        let t = PromptTemplate::from_parts("{{output}}\nAnswer:\n", meta).unwrap();
        assert_eq!(t.body, "{{output}}\nAnswer:");
    }

    #[test]
    fn load_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mine.txt");
        std::fs::write(&path, "Q: {{output}}\nAnswer:\n").unwrap();
        std::fs::write(
            dir.path().join("mine.toml"),
            "template_id = \"mine\"\nstyle = \"binary_qa\"\nplaceholders = [\"output\"]\n",
        )
        .unwrap();
        let t = PromptTemplate::load(&path).unwrap();
        assert_eq!(t.template_id, "mine");
        assert!(PromptTemplate::load(&dir.path().join("absent.txt")).is_err());
    }
}
