use serde::{Deserialize, Serialize};

use super::{ScoreScale, ValidationError};

/// One evaluation dimension of a task.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CriterionSpec {
    pub name: String,
    /// Name shown in prompts; defaults to the title-cased `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_name: Option<String>,
    pub display_definition: String,
    pub scale: ScoreScale,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation_steps: Option<Vec<String>>,
    pub task_intro: String,
}

impl CriterionSpec {
    pub fn new(
        name: impl Into<String>,
        definition: impl Into<String>,
        scale: ScoreScale,
        task_intro: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            display_name: None,
            display_definition: definition.into(),
            scale,
            evaluation_steps: None,
            task_intro: task_intro.into(),
        }
    }

    pub fn with_steps(mut self, steps: Vec<String>) -> Self {
        self.evaluation_steps = Some(steps);
        self
    }

    pub fn with_display_name(mut self, name: impl Into<String>) -> Self {
        self.display_name = Some(name.into());
        self
    }

    pub fn title(&self) -> String {
        match &self.display_name {
            Some(name) => name.clone(),
            None => title_case(&self.name),
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.name.trim().is_empty() {
            return Err(ValidationError::Criterion("criterion name is empty".into()));
        }
        self.scale.validate()?;
        if let Some(steps) = &self.evaluation_steps {
            if steps.is_empty() {
                return Err(ValidationError::Criterion(format!(
                    "criterion `{}` has an empty step list",
                    self.name
                )));
            }
            if steps.iter().any(|s| s.trim().is_empty()) {
                return Err(ValidationError::Criterion(format!(
                    "criterion `{}` has an empty evaluation step",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Validates each criterion and checks that names are unique.
pub fn validate_criteria(criteria: &[CriterionSpec]) -> Result<(), ValidationError> {
    let mut seen = std::collections::BTreeSet::new();
    for c in criteria {
        c.validate()?;
        if !seen.insert(c.name.as_str()) {
            return Err(ValidationError::Criterion(format!(
                "duplicate criterion name `{}`",
                c.name
            )));
        }
    }
    Ok(())
}

fn title_case(name: &str) -> String {
    name.split(['_', '-', ' '])
        .filter(|w| !w.is_empty())
        .map(|w| {
            let mut chars = w.chars();
            match chars.next() {
                Some(first) => first.to_uppercase().chain(chars).collect::<String>(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coherence() -> CriterionSpec {
        CriterionSpec::new("coherence", "def", ScoreScale::range(1, 5).unwrap(), "intro")
    }

    #[test]
    fn title_from_name() {
        assert_eq!(coherence().title(), "Coherence");
        let c = CriterionSpec::new("factual_consistency", "d", ScoreScale::yes_no(), "i");
        assert_eq!(c.title(), "Factual Consistency");
    }

    #[test]
    fn empty_step_rejected() {
        let c = coherence().with_steps(vec!["Read.".into(), " ".into()]);
        assert!(c.validate().is_err());
        assert!(coherence().with_steps(vec![]).validate().is_err());
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(validate_criteria(&[coherence(), coherence()]).is_err());
        assert!(validate_criteria(&[coherence()]).is_ok());
    }
}
