//! Prompt rendering and answer extraction.
//!
//! Two inference prompt styles are shipped: a chain-of-thought template
//! with a mandatory reasoning section and a direct template that forbids
//! reasoning. Reasoning-tuned models get the chain-of-thought template
//! with the reasoning scaffold removed. Rendering is a straight fill of
//! the `{context}` and `{question}` slots, byte-exact against the
//! template files.

use serde::{Deserialize, Serialize};
use std::fmt;

pub const COT_TEMPLATE: &str = include_str!("templates/cot.txt");
pub const COT_NO_REASONING_TEMPLATE: &str = include_str!("templates/cot_no_reasoning.txt");
pub const DIRECT_TEMPLATE: &str = include_str!("templates/direct.txt");
pub const JUDGE_TEMPLATE: &str = include_str!("templates/judge.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    CoT,
    Direct,
}

impl PromptMode {
    pub fn parse(s: &str) -> Option<PromptMode> {
        match s.to_ascii_lowercase().as_str() {
            "cot" => Some(PromptMode::CoT),
            "direct" => Some(PromptMode::Direct),
            _ => None,
        }
    }
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptMode::CoT => "cot",
            PromptMode::Direct => "direct",
        })
    }
}

/// Fills the selected template. `reasoning_model` strips the reasoning
/// scaffold from the chain-of-thought prompt (it has no effect on the
/// direct template).
pub fn render_prompt(
    context: &str,
    question: &str,
    mode: PromptMode,
    reasoning_model: bool,
) -> String {
    let template = match (mode, reasoning_model) {
        (PromptMode::CoT, false) => COT_TEMPLATE,
        (PromptMode::CoT, true) => COT_NO_REASONING_TEMPLATE,
        (PromptMode::Direct, _) => DIRECT_TEMPLATE,
    };
    template
        .replace("{context}", context)
        .replace("{question}", question)
}

pub const ANSWER_MARKER: &str = "**Answer:**";
pub const REASONING_MARKER: &str = "**Reasoning:**";
pub const NO_ANSWER_SENTINEL: &str = "No answer";

/// The answer section of a model response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedAnswer {
    pub text: String,
    /// The prediction signals "No answer".
    pub no_answer: bool,
    /// False when the marker was missing and the whole response was used.
    pub marker_found: bool,
}

/// Takes the text after the final `**Answer:**` marker, trimmed of
/// whitespace and markdown emphasis. A response with no marker is
/// returned whole, flagged via `marker_found`.
pub fn extract_answer(raw: &str) -> ExtractedAnswer {
    let (text, marker_found) = match raw.rfind(ANSWER_MARKER) {
        Some(pos) => (&raw[pos + ANSWER_MARKER.len()..], true),
        None => (raw, false),
    };
    let text = text.trim().trim_matches('*').trim().to_string();
    let no_answer = crate::eval::signals_no_answer(&text);
    ExtractedAnswer {
        text,
        no_answer,
        marker_found,
    }
}

/// The reasoning section of a chain-of-thought response: text between the
/// reasoning marker and the final answer marker.
pub fn extract_reasoning(raw: &str) -> Option<String> {
    let start = raw.find(REASONING_MARKER)? + REASONING_MARKER.len();
    let end = raw.rfind(ANSWER_MARKER)?;
    if end <= start {
        return None;
    }
    let section = raw[start..end].trim();
    // Strip a trailing list-bullet dash left over from the scaffold.
    let section = section.strip_suffix('-').unwrap_or(section).trim();
    (!section.is_empty()).then(|| section.to_string())
}
