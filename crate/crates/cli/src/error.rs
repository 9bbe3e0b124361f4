use geval::analysis::AnalysisError;
use geval::benchmarks::BenchmarkError;
use geval::llm::LlmError;
use geval::metaeval::MetaevalError;
use geval::prompt::{CotError, PromptError};
use geval::{JsonlError, JudgeError, ValidationError};

/// Process exit status by error class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    /// Usage, configuration, templates, criteria, credentials.
    Config = 2,
    /// The model backend could not be reached or answered malformed.
    Transport = 3,
    /// Model responses could not be turned into scores or steps.
    Parse = 4,
    /// Datasets, results and run artifacts: missing, malformed or inconsistent.
    Data = 5,
}

impl ExitClass {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// Class of a failure-manifest entry.
    pub fn of_failure_kind(kind: &str) -> Self {
        match kind {
            "parse" | "estimation" => ExitClass::Parse,
            "protocol" | "scripted_miss" | "transport" => ExitClass::Transport,
            _ => ExitClass::Config,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub class: ExitClass,
    pub message: String,
}

impl CliError {
    pub fn new(class: ExitClass, message: impl Into<String>) -> Self {
        Self {
            class,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ExitClass::Config, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(ExitClass::Data, message)
    }
}

fn llm_class(e: &LlmError) -> ExitClass {
    match e {
        LlmError::Transport { .. } | LlmError::Protocol { .. } | LlmError::ScriptedMiss { .. } => {
            ExitClass::Transport
        }
        LlmError::Cache(_) => ExitClass::Data,
        LlmError::InvalidRequest(_) | LlmError::Credential(_) | LlmError::Script(_) | LlmError::Config(_) => {
            ExitClass::Config
        }
    }
}

fn judge_class(e: &JudgeError) -> ExitClass {
    match e {
        JudgeError::Parse { .. } | JudgeError::Estimation(_) => ExitClass::Parse,
        JudgeError::MissingLogprobs => ExitClass::Transport,
        JudgeError::Config(_) | JudgeError::Prompt(_) | JudgeError::Validation(_) => ExitClass::Config,
        JudgeError::Llm(e) => llm_class(e),
        JudgeError::Pair { source, .. } => judge_class(source),
    }
}

macro_rules! classify {
    ($($ty:ty => $f:expr),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                let class: fn(&$ty) -> ExitClass = $f;
                CliError::new(class(&e), e.to_string())
            }
        })*
    };
}

classify! {
    LlmError => llm_class,
    JudgeError => judge_class,
    CotError => |e| match e {
        CotError::Backend(e) => llm_class(e),
        CotError::Unparseable { .. } => ExitClass::Parse,
        CotError::StepsPresent(_) => ExitClass::Config,
        CotError::Cache(_) => ExitClass::Data,
    },
    BenchmarkError => |e| match e {
        BenchmarkError::Descriptor(_) | BenchmarkError::UnknownAspect { .. } => ExitClass::Config,
        _ => ExitClass::Data,
    },
    AnalysisError => |e| match e {
        AnalysisError::Judge(e) => judge_class(e),
        AnalysisError::NoVariants => ExitClass::Config,
        _ => ExitClass::Data,
    },
    MetaevalError => |_| ExitClass::Data,
    JsonlError => |_| ExitClass::Data,
    PromptError => |_| ExitClass::Config,
    ValidationError => |_| ExitClass::Config,
}
