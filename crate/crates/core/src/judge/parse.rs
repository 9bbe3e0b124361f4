use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;

use super::JudgeError;
use crate::model::ScoreScale;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedScore {
    pub value: i64,
    pub raw_text: String,
    /// Byte range of the matched score within `raw_text`.
    pub match_span: Range<usize>,
}

fn number_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+(?:\.\d+)?").expect("valid regex"))
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Extracts a score from a model response.
///
/// Integer scales take the first standalone integer in the admissible set;
/// decimals and digits glued to letters are skipped. Binary scales take the
/// first whole-word occurrence of either label, case-insensitively.
pub fn parse_score(text: &str, scale: &ScoreScale) -> Result<ParsedScore, JudgeError> {
    let found = match scale {
        ScoreScale::IntegerRange { .. } => first_integer(text, scale),
        ScoreScale::LabeledBinary { positive, negative } => first_label(text, positive, negative),
    };
    found
        .map(|(value, match_span)| ParsedScore {
            value,
            raw_text: text.to_string(),
            match_span,
        })
        .ok_or_else(|| JudgeError::Parse {
            text: text.to_string(),
        })
}

fn first_integer(text: &str, scale: &ScoreScale) -> Option<(i64, Range<usize>)> {
    number_regex().find_iter(text).find_map(|m| {
        if m.as_str().contains('.') {
            return None;
        }
        let before = text[..m.start()].chars().next_back();
        let after = text[m.end()..].chars().next();
        if before.is_some_and(|c| is_word_char(c) || c == '.') || after.is_some_and(is_word_char) {
            return None;
        }
        let value: i64 = m.as_str().parse().ok()?;
        scale.contains(value).then(|| (value, m.range()))
    })
}

fn first_label(text: &str, positive: &str, negative: &str) -> Option<(i64, Range<usize>)> {
    let pattern = format!(
        r"(?i)\b(?:({})|({}))\b",
        regex::escape(positive),
        regex::escape(negative)
    );
    let re = Regex::new(&pattern).ok()?;
    let caps = re.captures(text)?;
    if let Some(m) = caps.get(1) {
        Some((1, m.range()))
    } else {
        caps.get(2).map(|m| (0, m.range()))
    }
}
