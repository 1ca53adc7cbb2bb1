//! Row-level answer judging.
//!
//! Gold answers are structured result sets while predictions are free
//! text, so each gold row is labeled Exact Match (100), Partial Match
//! (50), or No Match (0). The deterministic judge here is the
//! dependency-free fallback: normalized containment with numeric
//! tolerance. It approximates the model-judge criteria and reports label
//! themselves as such; a model judge can be plugged in through
//! [`RowJudge`].

use crate::exec::ResultSet;
use crate::relational::Value;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowLabel {
    #[serde(rename = "Exact Match")]
    ExactMatch,
    #[serde(rename = "Partial Match")]
    PartialMatch,
    #[serde(rename = "No Match")]
    NoMatch,
}

impl RowLabel {
    /// Percent score: 100 / 50 / 0.
    pub fn score(self) -> f64 {
        match self {
            RowLabel::ExactMatch => 100.0,
            RowLabel::PartialMatch => 50.0,
            RowLabel::NoMatch => 0.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("judge endpoint unavailable: {0}")]
    Unavailable(String),
    #[error("judge output malformed: {0}")]
    OutputMalformed(String),
}

/// One label per gold row; for an empty gold, a single label that is
/// ExactMatch iff the prediction signals "No answer".
pub trait RowJudge {
    fn judge_rows(
        &self,
        question: &str,
        prediction: &str,
        gold: &ResultSet,
    ) -> Result<Vec<RowLabel>, JudgeError>;

    /// Tag recorded in eval files, e.g. `deterministic`.
    fn kind(&self) -> String;
}

/// Pure containment judge: a gold row is ExactMatch when every non-null
/// cell occurs in the prediction (numbers within relative 1e-6, text as a
/// word-bounded normalized substring), PartialMatch when at least one
/// does, NoMatch otherwise. Duplicate gold rows are judged independently.
#[derive(Debug, Clone, Copy, Default)]
pub struct DeterministicJudge;

impl RowJudge for DeterministicJudge {
    fn judge_rows(
        &self,
        _question: &str,
        prediction: &str,
        gold: &ResultSet,
    ) -> Result<Vec<RowLabel>, JudgeError> {
        let normalized = normalize(prediction);
        let numbers = extract_numbers(prediction);

        if gold.rows.is_empty() {
            let label = if signals_no_answer(prediction) {
                RowLabel::ExactMatch
            } else {
                RowLabel::NoMatch
            };
            return Ok(vec![label]);
        }

        let padded = format!(" {normalized} ");
        let labels = gold
            .rows
            .iter()
            .map(|row| judge_row(row, &padded, &numbers))
            .collect();
        Ok(labels)
    }

    fn kind(&self) -> String {
        "deterministic".into()
    }
}

fn judge_row(row: &[Value], padded_prediction: &str, numbers: &[f64]) -> RowLabel {
    let mut checkable = 0usize;
    let mut matched = 0usize;
    for cell in row {
        if cell.is_null() {
            continue;
        }
        checkable += 1;
        if cell_matches(cell, padded_prediction, numbers) {
            matched += 1;
        }
    }
    if checkable == 0 || matched == checkable {
        RowLabel::ExactMatch
    } else if matched > 0 {
        RowLabel::PartialMatch
    } else {
        RowLabel::NoMatch
    }
}

fn cell_matches(cell: &Value, padded_prediction: &str, numbers: &[f64]) -> bool {
    if let Some(target) = cell.as_f64() {
        return numbers.iter().any(|n| approx_eq(*n, target));
    }
    let rendered = cell.render();
    if let Ok(target) = rendered.trim().parse::<f64>() {
        return numbers.iter().any(|n| approx_eq(*n, target));
    }
    let needle = normalize(&rendered);
    if needle.is_empty() {
        return true;
    }
    padded_prediction.contains(&format!(" {needle} "))
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * b.abs().max(1.0)
}

/// Case-folds, maps every non-alphanumeric character to a space, and
/// collapses runs of whitespace.
pub fn normalize(text: &str) -> String {
    let lowered = text.to_lowercase();
    let mut out = String::with_capacity(lowered.len());
    let mut last_space = true;
    for ch in lowered.chars() {
        if ch.is_alphanumeric() {
            out.push(ch);
            last_space = false;
        } else if !last_space {
            out.push(' ');
            last_space = true;
        }
    }
    while out.ends_with(' ') {
        out.pop();
    }
    out
}

/// Numbers appearing in the raw text, thousands separators allowed.
pub fn extract_numbers(text: &str) -> Vec<f64> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_digit() {
            let start = i;
            let mut j = i;
            let mut seen_dot = false;
            while j < bytes.len() {
                let cj = bytes[j] as char;
                let digit_follows =
                    j + 1 < bytes.len() && (bytes[j + 1] as char).is_ascii_digit();
                if cj.is_ascii_digit() || (cj == ',' && digit_follows) {
                    j += 1;
                } else if cj == '.' && !seen_dot && digit_follows {
                    seen_dot = true;
                    j += 1;
                } else {
                    break;
                }
            }
            let raw: String = text[start..j].chars().filter(|c| *c != ',').collect();
            if let Ok(v) = raw.parse::<f64>() {
                // Apply a leading minus when directly attached.
                let negative = start > 0
                    && bytes[start - 1] == b'-'
                    && (start < 2 || !(bytes[start - 2] as char).is_ascii_digit());
                out.push(if negative { -v } else { v });
            }
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

/// The prompt mandates the exact phrase "No answer"; detection is a
/// case-insensitive search on the normalized answer section.
pub fn signals_no_answer(prediction: &str) -> bool {
    let normalized = normalize(prediction);
    format!(" {normalized} ").contains(" no answer ")
}
